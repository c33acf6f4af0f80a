#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mapss/ga.hpp"
#include "mapss/vo_spec.hpp"

namespace mapss {

struct Snapshot;

// Maximum total node weight over all paths of a DAG. Node weights must be
// non-negative; throws Error(kInvalidArgument) on cycles or bad edges.
double longest_path(std::span<const double> weights, std::span<const std::pair<std::size_t, std::size_t>> edges);

struct PerformanceComponent {
  std::string id;
  Metric metric = Metric::kProcessDuration;
  bool minimize = true;
  double weight = 1.0;
};

// Phase-4 performance function: maps an assignment to a vector with one
// component per declared performance requirement.
//   process_duration          longest path through the precedence DAG, an
//                             activity lasting the summed response_time of
//                             the services assigned to its roles
//   subprocess_response_time  same, restricted to the named sub-process
//   total_cost                summed service cost over activities
//   indicator                 indicator value with the variant as members
class PerformanceFunction {
 public:
  PerformanceFunction(const VOSpecification& spec, std::shared_ptr<const Snapshot> snapshot);

  const std::vector<PerformanceComponent>& components() const { return components_; }
  PerformanceVector evaluate(const Assignment& assignment) const;

 private:
  std::optional<double> duration(const Assignment& assignment, const PerformanceRequirement& requirement,
                                 std::vector<std::string>& issues) const;
  std::optional<double> cost(const Assignment& assignment, const PerformanceRequirement& requirement,
                             std::vector<std::string>& issues) const;

  std::shared_ptr<const VOSpecification> spec_;
  std::shared_ptr<const Snapshot> snapshot_;
  std::vector<const PerformanceRequirement*> requirements_;
  std::vector<PerformanceComponent> components_;
};

// Throws kNotFound when an indicator component names an undefined indicator.
PerformanceFunction performance_fitness_of(const VOSpecification& spec, std::shared_ptr<const Snapshot> snapshot);

PerformanceVector evaluate_performance(const VOVariant& variant, const VOSpecification& spec,
                                       const CandidateSets& sets, std::shared_ptr<const Snapshot> snapshot);

struct Objective {
  bool minimize = true;
  double weight = 1.0;
};

struct RankItem {
  Genome genome;
  std::vector<std::optional<double>> values;
};

struct RankedEntry {
  std::size_t index = 0;  // into the ranked items
  std::size_t rank = 0;   // 1-based position
  std::optional<std::size_t> front;
};

// Orders items best first. weighted_sum min-max normalizes each component over
// the items (a constant component contributes 0) and sums weighted utilities;
// lexicographic compares components in `priority` order; pareto sorts by
// non-dominated fronts, then weighted sum inside a front. Ties go to the
// smaller genome; items with unavailable components come last.
std::vector<RankedEntry> rank(std::span<const RankItem> items, std::span<const Objective> objectives,
                              RankingKind kind, std::span<const std::size_t> priority = {});

// True when `a` is at least as good as `b` everywhere and better somewhere.
bool dominates(std::span<const double> a, std::span<const double> b, std::span<const Objective> objectives);

// Ranks variants carrying performance vectors and reorders them by rank.
void rank_variants(std::vector<VOVariant>& variants, const std::vector<PerformanceComponent>& components,
                   const RankingChoice& choice);

}  // namespace mapss
