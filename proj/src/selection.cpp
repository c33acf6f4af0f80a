#include "mapss/selection.hpp"

#include <algorithm>

#include "mapss/error.hpp"

namespace mapss {

CandidateSets select_candidates(const VOSpecification& spec, const Registry& registry) {
  CandidateSets sets;
  sets.reserve(spec.roles.size());
  for (const auto& role : spec.roles) {
    CandidateSet set{role.name, {}};
    for (const auto& [id, element] : registry.elements()) {
      if (element.kind != role.target_kind) continue;
      const double conformance = registry.evaluate_conformance(element, role);
      if (conformance >= spec.thresholds.phase2_cutoff) set.candidates.push_back({id, conformance});
    }
    std::stable_sort(set.candidates.begin(), set.candidates.end(), [](const Candidate& a, const Candidate& b) {
      if (a.conformance != b.conformance) return a.conformance > b.conformance;
      return a.element_id < b.element_id;
    });
    if (set.candidates.size() > spec.thresholds.phase2_max_candidates) {
      set.candidates.resize(spec.thresholds.phase2_max_candidates);
    }
    if (set.candidates.empty()) {
      throw Error(ErrorCode::kUnsatisfiableRole, "unsatisfiable role '" + role.name + "': no candidate reaches the cutoff",
                  role.name);
    }
    sets.push_back(std::move(set));
  }
  return sets;
}

}  // namespace mapss
