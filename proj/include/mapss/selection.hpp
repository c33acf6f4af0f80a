#pragma once

#include <string>
#include <vector>

#include "mapss/registry.hpp"
#include "mapss/vo_spec.hpp"

namespace mapss {

struct Candidate {
  std::string element_id;
  double conformance = 0.0;

  bool operator==(const Candidate&) const = default;
};

// Candidates for one role, sorted by descending conformance, ties by id.
struct CandidateSet {
  std::string role;
  std::vector<Candidate> candidates;

  bool operator==(const CandidateSet&) const = default;
};

// One set per role, in the specification's role order (= genome positions).
using CandidateSets = std::vector<CandidateSet>;

// Phase 2. Throws Error(kUnsatisfiableRole) naming the first role left
// without candidates.
CandidateSets select_candidates(const VOSpecification& spec, const Registry& registry);

}  // namespace mapss
