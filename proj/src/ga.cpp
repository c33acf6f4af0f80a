#include "mapss/ga.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>

#include "mapss/error.hpp"

namespace mapss {

std::size_t Rng::uniform_index(std::size_t n) {
  const std::uint64_t bound = n;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t draw = next();
  while (draw >= limit) draw = next();
  return static_cast<std::size_t>(draw % bound);
}

double Rng::uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

Assignment to_assignment(const Genome& genome, const CandidateSets& sets) {
  Assignment assignment;
  for (std::size_t i = 0; i < sets.size() && i < genome.assignment.size(); ++i) {
    assignment.emplace(sets[i].role, genome.assignment[i]);
  }
  return assignment;
}

void GAConfig::validate() const {
  auto fail = [](const std::string& message) { throw Error(ErrorCode::kInvalidArgument, message); };
  if (population_size == 0 || generations == 0 || tournament_size == 0) {
    fail("population size, generations and tournament size must be positive");
  }
  if (elite_count == 0) fail("elite count must be positive");
  if (elite_count >= population_size) fail("elite count must be below the population size");
  if (tournament_size > population_size) fail("tournament size must not exceed the population size");
  if (!(crossover_probability >= 0.0 && crossover_probability <= 1.0) ||
      !(mutation_probability >= 0.0 && mutation_probability <= 1.0)) {
    fail("probabilities must lie in [0, 1]");
  }
  if (top_k == 0) fail("top_k must be positive");
}

bool PerformanceVector::complete() const {
  return std::all_of(values.begin(), values.end(), [](const auto& v) { return v.has_value(); });
}

std::pair<Genome, Genome> crossover(const Genome& parent_a, const Genome& parent_b, std::size_t cut_a,
                                    std::size_t cut_b) {
  const auto n = parent_a.assignment.size();
  if (parent_b.assignment.size() != n) {
    throw Error(ErrorCode::kInvalidArgument, "crossover parents differ in length");
  }
  if (!(cut_a < cut_b) || cut_b > n) {
    throw Error(ErrorCode::kInvalidArgument, "crossover cut points must satisfy cut_a < cut_b <= N");
  }
  if (n < 2) return {parent_a, parent_b};
  Genome child_a = parent_a;
  Genome child_b = parent_b;
  for (std::size_t i = cut_a; i < cut_b; ++i) {
    child_a.assignment[i] = parent_b.assignment[i];
    child_b.assignment[i] = parent_a.assignment[i];
  }
  return {std::move(child_a), std::move(child_b)};
}

namespace {

bool exclusive_at(const std::vector<bool>& exclusive, std::size_t i) {
  return i < exclusive.size() && exclusive[i];
}

bool better(const ScoredGenome& a, const ScoredGenome& b) {
  if (a.fitness != b.fitness) return a.fitness > b.fitness;
  return a.genome < b.genome;
}

}  // namespace

Genome mutate(const Genome& genome, const CandidateSets& sets, Rng& rng, const std::vector<bool>& exclusive) {
  Genome result = genome;
  const auto n = genome.assignment.size();
  if (n == 0) return result;
  const auto position = rng.uniform_index(n);
  const auto& current = genome.assignment[position];
  std::set<std::string> taken;
  if (exclusive_at(exclusive, position)) {
    for (std::size_t i = 0; i < n; ++i) {
      if (i != position && exclusive_at(exclusive, i)) taken.insert(genome.assignment[i]);
    }
  }
  std::vector<const std::string*> alternatives;
  for (const auto& candidate : sets.at(position).candidates) {
    if (candidate.element_id != current && !taken.contains(candidate.element_id)) {
      alternatives.push_back(&candidate.element_id);
    }
  }
  if (alternatives.empty()) return result;
  result.assignment[position] = *alternatives[rng.uniform_index(alternatives.size())];
  return result;
}

std::vector<bool> exclusivity_mask(const VOSpecification& spec) {
  std::vector<bool> mask(spec.roles.size(), false);
  if (!spec.exclusivity) return mask;
  for (std::size_t i = 0; i < spec.roles.size(); ++i) {
    mask[i] = spec.roles[i].target_kind == ElementKind::kPartner;
  }
  return mask;
}

bool is_feasible(const Genome& genome, const std::vector<bool>& exclusive) {
  std::set<std::string> used;
  for (std::size_t i = 0; i < genome.assignment.size(); ++i) {
    if (exclusive_at(exclusive, i) && !used.insert(genome.assignment[i]).second) return false;
  }
  return true;
}

bool repair_exclusivity(Genome& genome, const CandidateSets& sets, const std::vector<bool>& exclusive) {
  std::set<std::string> used;
  for (std::size_t i = 0; i < genome.assignment.size(); ++i) {
    if (!exclusive_at(exclusive, i)) continue;
    if (used.insert(genome.assignment[i]).second) continue;
    // Keep the elements of later, not yet visited positions available when possible.
    std::set<std::string> reserved = used;
    for (std::size_t j = i + 1; j < genome.assignment.size(); ++j) {
      if (exclusive_at(exclusive, j)) reserved.insert(genome.assignment[j]);
    }
    const std::string* replacement = nullptr;
    for (const auto& candidate : sets.at(i).candidates) {
      if (!reserved.contains(candidate.element_id)) {
        replacement = &candidate.element_id;
        break;
      }
    }
    if (replacement == nullptr) {
      for (const auto& candidate : sets.at(i).candidates) {
        if (!used.contains(candidate.element_id)) {
          replacement = &candidate.element_id;
          break;
        }
      }
    }
    if (replacement == nullptr) return false;
    genome.assignment[i] = *replacement;
    used.insert(*replacement);
  }
  return is_feasible(genome, exclusive);
}

namespace {

class Archive {
 public:
  explicit Archive(const GenomeScorer& score) : score_(score) {}

  double fitness(const Genome& genome) {
    auto it = scores_.find(genome);
    if (it != scores_.end()) return it->second;
    const double value = score_(genome);
    scores_.emplace(genome, value);
    best_ = std::max(best_, value);
    return value;
  }

  double best() const { return best_; }
  std::size_t evaluations() const { return scores_.size(); }

  std::vector<ScoredGenome> emit(double threshold, std::size_t top_k) const {
    std::vector<ScoredGenome> out;
    for (const auto& [genome, value] : scores_) {
      if (value >= threshold) out.push_back({genome, value});
    }
    std::sort(out.begin(), out.end(), better);
    if (top_k != 0 && out.size() > top_k) out.resize(top_k);
    return out;
  }

 private:
  const GenomeScorer& score_;
  std::map<Genome, double> scores_;
  double best_ = -std::numeric_limits<double>::infinity();
};

// Depth-first search for the lexicographically first feasible genome in
// candidate order.
bool first_feasible(const CandidateSets& sets, const std::vector<bool>& exclusive, Genome& genome, std::size_t position,
                    std::set<std::string>& used) {
  if (position == sets.size()) return true;
  for (const auto& candidate : sets[position].candidates) {
    const bool exclusive_here = exclusive_at(exclusive, position);
    if (exclusive_here && used.contains(candidate.element_id)) continue;
    genome.assignment[position] = candidate.element_id;
    if (exclusive_here) used.insert(candidate.element_id);
    if (first_feasible(sets, exclusive, genome, position + 1, used)) return true;
    if (exclusive_here) used.erase(candidate.element_id);
  }
  return false;
}

void check_sets(const CandidateSets& sets) {
  for (const auto& set : sets) {
    if (set.candidates.empty()) {
      throw Error(ErrorCode::kUnsatisfiableRole, "empty candidate set for role '" + set.role + "'", set.role);
    }
  }
}

}  // namespace

SearchResult run_ga(const SearchSpace& space, const GAConfig& config, const GenomeScorer& score) {
  config.validate();
  const auto& sets = space.sets;
  check_sets(sets);
  const std::size_t n = sets.size();
  const auto& mask = space.exclusive;

  Rng rng(config.seed);
  Archive archive(score);
  SearchResult result;

  Genome fallback{std::vector<std::string>(n)};
  {
    std::set<std::string> used;
    if (!first_feasible(sets, mask, fallback, 0, used)) return result;
  }

  auto random_genome = [&]() {
    Genome genome{std::vector<std::string>(n)};
    for (int attempt = 0; attempt < 64; ++attempt) {
      for (std::size_t i = 0; i < n; ++i) {
        genome.assignment[i] = sets[i].candidates[rng.uniform_index(sets[i].candidates.size())].element_id;
      }
      if (repair_exclusivity(genome, sets, mask)) return genome;
    }
    return fallback;
  };

  std::vector<ScoredGenome> population;
  population.reserve(config.population_size);
  for (std::size_t i = 0; i < config.population_size; ++i) {
    Genome genome = random_genome();
    const double fitness = archive.fitness(genome);
    population.push_back({std::move(genome), fitness});
  }
  result.best_per_generation.push_back(archive.best());

  auto tournament = [&]() -> const ScoredGenome& {
    const ScoredGenome* winner = &population[rng.uniform_index(population.size())];
    for (std::size_t k = 1; k < config.tournament_size; ++k) {
      const auto& challenger = population[rng.uniform_index(population.size())];
      if (better(challenger, *winner)) winner = &challenger;
    }
    return *winner;
  };

  auto draw_cuts = [&]() {
    while (true) {
      auto a = rng.uniform_index(n + 1);
      auto b = rng.uniform_index(n + 1);
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      if (a == 0 && b == n) continue;  // a full swap only relabels the parents
      return std::pair{a, b};
    }
  };

  for (std::size_t generation = 0; generation < config.generations; ++generation) {
    std::sort(population.begin(), population.end(), better);
    std::vector<ScoredGenome> next(population.begin(), population.begin() + config.elite_count);
    while (next.size() < config.population_size) {
      const auto& parent_a = tournament();
      const auto& parent_b = tournament();
      Genome child_a = parent_a.genome;
      Genome child_b = parent_b.genome;
      if (n >= 2 && rng.uniform01() < config.crossover_probability) {
        const auto [cut_a, cut_b] = draw_cuts();
        std::tie(child_a, child_b) = crossover(parent_a.genome, parent_b.genome, cut_a, cut_b);
        if (!repair_exclusivity(child_a, sets, mask)) child_a = parent_a.genome;
        if (!repair_exclusivity(child_b, sets, mask)) child_b = parent_b.genome;
      }
      if (rng.uniform01() < config.mutation_probability) child_a = mutate(child_a, sets, rng, mask);
      if (rng.uniform01() < config.mutation_probability) child_b = mutate(child_b, sets, rng, mask);
      for (auto* child : {&child_a, &child_b}) {
        if (next.size() == config.population_size) break;
        // Clones of a genome already in the next population get re-mutated;
        // without this small pools collapse onto one genome within a few
        // generations and crossover stops doing anything.
        auto cloned = [&]() {
          return std::any_of(next.begin(), next.end(), [&](const ScoredGenome& s) { return s.genome == *child; });
        };
        for (std::size_t attempt = 0; attempt < n && cloned(); ++attempt) *child = mutate(*child, sets, rng, mask);
        const double fitness = archive.fitness(*child);
        next.push_back({std::move(*child), fitness});
      }
    }
    population = std::move(next);
    result.best_per_generation.push_back(archive.best());
  }

  result.variants = archive.emit(space.threshold, space.top_k);
  result.evaluations = archive.evaluations();
  return result;
}

SearchResult enumerate_all(const SearchSpace& space, const GenomeScorer& score, std::size_t bound) {
  const auto& sets = space.sets;
  check_sets(sets);
  std::size_t total = 1;
  for (const auto& set : sets) {
    if (total > bound / set.candidates.size()) {
      throw Error(ErrorCode::kBoundExceeded,
                  "search space exceeds the enumeration bound of " + std::to_string(bound) + "; use run_ga");
    }
    total *= set.candidates.size();
  }
  const auto& mask = space.exclusive;

  SearchResult result;
  std::vector<std::size_t> index(sets.size(), 0);
  Genome genome{std::vector<std::string>(sets.size())};
  while (true) {
    for (std::size_t i = 0; i < sets.size(); ++i) genome.assignment[i] = sets[i].candidates[index[i]].element_id;
    if (is_feasible(genome, mask)) {
      const double fitness = score(genome);
      ++result.evaluations;
      if (fitness >= space.threshold) result.variants.push_back({genome, fitness});
    }
    std::size_t position = 0;
    while (position < sets.size() && ++index[position] == sets[position].candidates.size()) {
      index[position++] = 0;
    }
    if (position == sets.size()) break;
  }
  std::sort(result.variants.begin(), result.variants.end(), better);
  if (space.top_k != 0 && result.variants.size() > space.top_k) result.variants.resize(space.top_k);
  return result;
}

namespace {

std::vector<VOVariant> to_variants(const std::vector<ScoredGenome>& scored, const CandidateSets& sets,
                                   const FitnessFunction& fitness) {
  std::vector<VOVariant> variants;
  variants.reserve(scored.size());
  for (const auto& entry : scored) {
    VOVariant variant;
    variant.genome = entry.genome;
    const auto evaluation = fitness.evaluate(to_assignment(entry.genome, sets));
    variant.fitness = evaluation.fitness;
    variant.social_breakdown = evaluation.social.breakdown;
    variants.push_back(std::move(variant));
  }
  return variants;
}

}  // namespace

std::vector<VOVariant> run_ga(const VOSpecification& spec, const CandidateSets& sets, const GAConfig& config,
                              const FitnessFunction& fitness) {
  SearchSpace space{sets, exclusivity_mask(spec), spec.thresholds.phase3_threshold, config.top_k};
  const auto result =
      run_ga(space, config, [&](const Genome& genome) { return fitness(to_assignment(genome, sets)); });
  return to_variants(result.variants, sets, fitness);
}

std::vector<VOVariant> enumerate_all(const VOSpecification& spec, const CandidateSets& sets,
                                     const FitnessFunction& fitness, std::size_t top_k, std::size_t bound) {
  SearchSpace space{sets, exclusivity_mask(spec), spec.thresholds.phase3_threshold, top_k};
  const auto result =
      enumerate_all(space, [&](const Genome& genome) { return fitness(to_assignment(genome, sets)); }, bound);
  return to_variants(result.variants, sets, fitness);
}

}  // namespace mapss
