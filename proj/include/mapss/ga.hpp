#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "mapss/selection.hpp"
#include "mapss/vo_spec.hpp"

namespace mapss {

// Seeded generator with portable bounded draws (the standard distributions
// are implementation-defined, which would break cross-platform replay).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, n). Requires n > 0.
  std::size_t uniform_index(std::size_t n);
  // Uniform in [0, 1).
  double uniform01();

 private:
  std::mt19937_64 engine_;
};

// Position i holds the element assigned to role i.
struct Genome {
  std::vector<std::string> assignment;

  auto operator<=>(const Genome&) const = default;
};

Assignment to_assignment(const Genome& genome, const CandidateSets& sets);

struct GAConfig {
  std::size_t population_size = 50;
  std::size_t generations = 200;
  std::size_t tournament_size = 3;
  std::size_t elite_count = 2;
  double crossover_probability = 0.9;
  double mutation_probability = 0.2;
  std::uint64_t seed = 0;
  // Phase 3 emits at most this many variants.
  std::size_t top_k = 100;

  // Throws Error(kInvalidArgument).
  void validate() const;
  bool operator==(const GAConfig&) const = default;
};

struct PerformanceVector {
  std::vector<std::optional<double>> values;
  std::vector<std::string> issues;

  bool complete() const;
  bool operator==(const PerformanceVector&) const = default;
};

struct VOVariant {
  Genome genome;
  double fitness = 0.0;
  std::vector<RequirementDegree> social_breakdown;
  std::optional<PerformanceVector> performance;
  std::optional<std::size_t> rank;
  std::optional<std::size_t> front;
  bool stale = false;
};

// Standard two-point crossover: genes in [cut_a, cut_b) are exchanged.
// Requires equal lengths and cut_a < cut_b <= N; for N = 1 the children are
// copies of the parents.
std::pair<Genome, Genome> crossover(const Genome& parent_a, const Genome& parent_b, std::size_t cut_a,
                                    std::size_t cut_b);

// Picks a position uniformly and replaces its element by another candidate of
// that role, drawn uniformly. Exclusive positions additionally avoid elements
// held by other exclusive positions. Unchanged when no alternative exists.
Genome mutate(const Genome& genome, const CandidateSets& sets, Rng& rng, const std::vector<bool>& exclusive = {});

// Positions subject to the one-role-per-partner rule.
std::vector<bool> exclusivity_mask(const VOSpecification& spec);

bool is_feasible(const Genome& genome, const std::vector<bool>& exclusive);

// Re-draws conflicting exclusive positions, lowest position first, taking the
// first unused candidate in candidate-set order. Returns false if impossible.
bool repair_exclusivity(Genome& genome, const CandidateSets& sets, const std::vector<bool>& exclusive);

using GenomeScorer = std::function<double(const Genome&)>;

struct ScoredGenome {
  Genome genome;
  double fitness = 0.0;
};

struct SearchSpace {
  const CandidateSets& sets;
  std::vector<bool> exclusive;
  double threshold = 0.0;
  // 0 keeps every variant at or above the threshold.
  std::size_t top_k = 0;
};

struct SearchResult {
  // Deduplicated, fitness descending, ties by genome order.
  std::vector<ScoredGenome> variants;
  // Best archived fitness after initialisation and after each generation.
  std::vector<double> best_per_generation;
  std::size_t evaluations = 0;
};

SearchResult run_ga(const SearchSpace& space, const GAConfig& config, const GenomeScorer& score);

// Exhaustive oracle. Throws kBoundExceeded when the search space is larger
// than `bound`.
SearchResult enumerate_all(const SearchSpace& space, const GenomeScorer& score, std::size_t bound = 1'000'000);

std::vector<VOVariant> run_ga(const VOSpecification& spec, const CandidateSets& sets, const GAConfig& config,
                              const FitnessFunction& fitness);
std::vector<VOVariant> enumerate_all(const VOSpecification& spec, const CandidateSets& sets,
                                     const FitnessFunction& fitness, std::size_t top_k = 0,
                                     std::size_t bound = 1'000'000);

}  // namespace mapss
