#include "mapss/performance.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "mapss/error.hpp"
#include "mapss/store.hpp"

namespace mapss {

double longest_path(std::span<const double> weights, std::span<const std::pair<std::size_t, std::size_t>> edges) {
  const std::size_t n = weights.size();
  for (const double w : weights) {
    if (!(w >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "activity durations must be non-negative");
  }
  std::vector<std::vector<std::size_t>> successors(n);
  std::vector<std::size_t> indegree(n, 0);
  for (const auto& [from, to] : edges) {
    if (from >= n || to >= n) throw Error(ErrorCode::kInvalidArgument, "precedence edge references an unknown node");
    successors[from].push_back(to);
    ++indegree[to];
  }
  // Kahn's algorithm; best[v] is the heaviest path ending at v.
  std::vector<double> best(weights.begin(), weights.end());
  std::vector<std::size_t> ready;
  for (std::size_t v = 0; v < n; ++v) {
    if (indegree[v] == 0) ready.push_back(v);
  }
  std::size_t visited = 0;
  double longest = 0.0;
  while (!ready.empty()) {
    const auto v = ready.back();
    ready.pop_back();
    ++visited;
    longest = std::max(longest, best[v]);
    for (const auto next : successors[v]) {
      best[next] = std::max(best[next], best[v] + weights[next]);
      if (--indegree[next] == 0) ready.push_back(next);
    }
  }
  if (visited != n) throw Error(ErrorCode::kInvalidArgument, "precedence graph has a cycle");
  return longest;
}

PerformanceFunction::PerformanceFunction(const VOSpecification& spec, std::shared_ptr<const Snapshot> snapshot)
    : spec_(std::make_shared<const VOSpecification>(spec)), snapshot_(std::move(snapshot)) {
  const auto& declared = spec_->performance_requirements;
  auto add = [&](const PerformanceRequirement& requirement) {
    if (requirement.metric == Metric::kIndicator &&
        (!requirement.indicator || snapshot_->indicator(*requirement.indicator) == nullptr)) {
      throw Error(ErrorCode::kNotFound,
                  "performance requirement '" + requirement.id + "' references an undefined indicator",
                  requirement.indicator.value_or(""));
    }
    requirements_.push_back(&requirement);
    components_.push_back({requirement.id, requirement.metric, requirement.minimize(), requirement.weight});
  };
  if (spec_->performance_fitness.components.empty()) {
    for (const auto& requirement : declared) add(requirement);
    return;
  }
  for (const auto& id : spec_->performance_fitness.components) {
    auto it = std::find_if(declared.begin(), declared.end(), [&](const auto& r) { return r.id == id; });
    if (it == declared.end()) {
      throw Error(ErrorCode::kSpecInvalid, "unknown performance component '" + id + "'", id);
    }
    add(*it);
  }
}

namespace {

// Sum of `path` over the service-kind roles of an activity.
std::optional<double> activity_sum(const Activity& activity, const VOSpecification& spec, const Snapshot& snapshot,
                                   const Assignment& assignment, const std::string& path,
                                   std::optional<std::string>& unit, std::vector<std::string>& issues) {
  double total = 0.0;
  for (const auto& role_name : activity.roles) {
    const auto* role = spec.role(role_name);
    if (role == nullptr || role->target_kind != ElementKind::kService) continue;
    auto it = assignment.find(role_name);
    if (it == assignment.end()) {
      issues.push_back("role '" + role_name + "' is unassigned");
      return std::nullopt;
    }
    const auto* element = snapshot.registry.find(it->second);
    const Quantity* quantity = nullptr;
    std::vector<AttributeValue> values;
    if (element != nullptr) values = snapshot.registry.resolve(*element, path);
    for (const auto& value : values) {
      if ((quantity = value.as_number()) != nullptr) break;
    }
    if (quantity == nullptr) {
      issues.push_back("service '" + it->second + "' lacks '" + path + "'");
      return std::nullopt;
    }
    if (unit && *unit != quantity->unit) {
      issues.push_back("inconsistent units for '" + path + "'");
      return std::nullopt;
    }
    unit = quantity->unit;
    total += quantity->value;
  }
  return total;
}

std::vector<const Activity*> scoped_activities(const VOSpecification& spec, const PerformanceRequirement& requirement) {
  std::vector<const Activity*> out;
  const auto& process = spec.protocol.process;
  const std::vector<std::string>* members = nullptr;
  if (requirement.aspect == Aspect::kServiceSubset && requirement.sub_process) {
    auto it = process.sub_processes.find(*requirement.sub_process);
    if (it != process.sub_processes.end()) members = &it->second;
  }
  for (const auto& activity : process.activities) {
    if (members == nullptr || std::find(members->begin(), members->end(), activity.id) != members->end()) {
      out.push_back(&activity);
    }
  }
  return out;
}

bool unit_ok(const PerformanceRequirement& requirement, const std::optional<std::string>& unit,
             std::vector<std::string>& issues) {
  if (requirement.unit.empty() || !unit || *unit == requirement.unit) return true;
  issues.push_back("component '" + requirement.id + "' measured in '" + *unit + "', expected '" + requirement.unit + "'");
  return false;
}

}  // namespace

std::optional<double> PerformanceFunction::duration(const Assignment& assignment,
                                                    const PerformanceRequirement& requirement,
                                                    std::vector<std::string>& issues) const {
  const auto activities = scoped_activities(*spec_, requirement);
  std::map<std::string, std::size_t> index;
  std::vector<double> weights;
  std::optional<std::string> unit;
  for (const auto* activity : activities) {
    const auto weight = activity_sum(*activity, *spec_, *snapshot_, assignment, "non_functional.response_time", unit, issues);
    if (!weight) return std::nullopt;
    if (*weight < 0.0) {
      issues.push_back("activity '" + activity->id + "' has a negative response time");
      return std::nullopt;
    }
    index.emplace(activity->id, weights.size());
    weights.push_back(*weight);
  }
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (const auto& [from, to] : spec_->protocol.process.precedence) {
    auto a = index.find(from);
    auto b = index.find(to);
    if (a != index.end() && b != index.end()) edges.emplace_back(a->second, b->second);
  }
  if (!unit_ok(requirement, unit, issues)) return std::nullopt;
  return longest_path(weights, edges);
}

std::optional<double> PerformanceFunction::cost(const Assignment& assignment, const PerformanceRequirement& requirement,
                                                std::vector<std::string>& issues) const {
  double total = 0.0;
  std::optional<std::string> unit;
  for (const auto* activity : scoped_activities(*spec_, requirement)) {
    const auto value = activity_sum(*activity, *spec_, *snapshot_, assignment, "non_functional.cost", unit, issues);
    if (!value) return std::nullopt;
    total += *value;
  }
  if (!unit_ok(requirement, unit, issues)) return std::nullopt;
  return total;
}

PerformanceVector PerformanceFunction::evaluate(const Assignment& assignment) const {
  PerformanceVector vector;
  std::set<std::string> members;
  for (const auto& [role, element] : assignment) members.insert(element);
  for (const auto* requirement : requirements_) {
    std::optional<double> value;
    switch (requirement->metric) {
      case Metric::kProcessDuration:
      case Metric::kSubprocessResponseTime:
        value = duration(assignment, *requirement, vector.issues);
        break;
      case Metric::kTotalCost:
        value = cost(assignment, *requirement, vector.issues);
        break;
      case Metric::kIndicator: {
        const auto* indicator = snapshot_->indicator(*requirement->indicator);
        const auto evaluated = evaluate_expression(indicator->expression, snapshot_->context(&members));
        value = evaluated.value;
        if (!value) vector.issues.push_back("indicator '" + indicator->id + "': " + evaluated.error);
        break;
      }
    }
    vector.values.push_back(value);
  }
  return vector;
}

PerformanceFunction performance_fitness_of(const VOSpecification& spec, std::shared_ptr<const Snapshot> snapshot) {
  return PerformanceFunction(spec, std::move(snapshot));
}

PerformanceVector evaluate_performance(const VOVariant& variant, const VOSpecification& spec,
                                       const CandidateSets& sets, std::shared_ptr<const Snapshot> snapshot) {
  return performance_fitness_of(spec, std::move(snapshot)).evaluate(to_assignment(variant.genome, sets));
}

bool dominates(std::span<const double> a, std::span<const double> b, std::span<const Objective> objectives) {
  bool strictly = false;
  for (std::size_t i = 0; i < objectives.size(); ++i) {
    const double lhs = objectives[i].minimize ? a[i] : -a[i];
    const double rhs = objectives[i].minimize ? b[i] : -b[i];
    if (lhs > rhs) return false;
    if (lhs < rhs) strictly = true;
  }
  return strictly;
}

namespace {

std::vector<double> weighted_scores(std::span<const RankItem> items, const std::vector<std::size_t>& complete,
                                    std::span<const Objective> objectives) {
  std::vector<double> scores(items.size(), 0.0);
  double total_weight = 0.0;
  for (const auto& objective : objectives) total_weight += objective.weight;
  if (total_weight <= 0.0) return scores;
  for (std::size_t c = 0; c < objectives.size(); ++c) {
    double lo = 0.0;
    double hi = 0.0;
    bool first = true;
    for (const auto i : complete) {
      const double v = *items[i].values[c];
      lo = first ? v : std::min(lo, v);
      hi = first ? v : std::max(hi, v);
      first = false;
    }
    if (!(hi > lo)) continue;
    const double weight = objectives[c].weight / total_weight;
    for (const auto i : complete) {
      const double v = *items[i].values[c];
      const double utility = objectives[c].minimize ? (hi - v) / (hi - lo) : (v - lo) / (hi - lo);
      scores[i] += weight * utility;
    }
  }
  return scores;
}

}  // namespace

std::vector<RankedEntry> rank(std::span<const RankItem> items, std::span<const Objective> objectives, RankingKind kind,
                              std::span<const std::size_t> priority) {
  for (const auto& item : items) {
    if (item.values.size() != objectives.size()) {
      throw Error(ErrorCode::kInvalidArgument, "performance vector arity differs from the declared components");
    }
  }
  std::vector<std::size_t> complete;
  std::vector<std::size_t> incomplete;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const bool ok = std::all_of(items[i].values.begin(), items[i].values.end(), [](const auto& v) { return v.has_value(); });
    (ok ? complete : incomplete).push_back(i);
  }
  const auto scores = weighted_scores(items, complete, objectives);
  std::vector<std::optional<std::size_t>> fronts(items.size());

  auto genome_less = [&](std::size_t a, std::size_t b) {
    if (items[a].genome != items[b].genome) return items[a].genome < items[b].genome;
    return a < b;
  };
  auto by_score = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return genome_less(a, b);
  };

  std::vector<std::size_t> order;
  switch (kind) {
    case RankingKind::kWeightedSum:
      order = complete;
      std::sort(order.begin(), order.end(), by_score);
      break;
    case RankingKind::kLexicographic: {
      std::vector<std::size_t> sequence(priority.begin(), priority.end());
      if (sequence.empty()) {
        sequence.resize(objectives.size());
        std::iota(sequence.begin(), sequence.end(), 0);
      }
      order = complete;
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        for (const auto c : sequence) {
          const double lhs = *items[a].values[c];
          const double rhs = *items[b].values[c];
          if (lhs != rhs) return objectives[c].minimize ? lhs < rhs : lhs > rhs;
        }
        return genome_less(a, b);
      });
      break;
    }
    case RankingKind::kPareto: {
      std::vector<std::vector<double>> values(items.size());
      for (const auto i : complete) {
        for (const auto& v : items[i].values) values[i].push_back(*v);
      }
      std::vector<std::size_t> remaining = complete;
      std::size_t front = 1;
      while (!remaining.empty()) {
        std::vector<std::size_t> current;
        std::vector<std::size_t> rest;
        for (const auto i : remaining) {
          const bool dominated = std::any_of(remaining.begin(), remaining.end(), [&](std::size_t j) {
            return j != i && dominates(values[j], values[i], objectives);
          });
          (dominated ? rest : current).push_back(i);
        }
        std::sort(current.begin(), current.end(), by_score);
        for (const auto i : current) {
          fronts[i] = front;
          order.push_back(i);
        }
        remaining = std::move(rest);
        ++front;
      }
      break;
    }
  }
  std::sort(incomplete.begin(), incomplete.end(), genome_less);
  order.insert(order.end(), incomplete.begin(), incomplete.end());

  std::vector<RankedEntry> ranked;
  ranked.reserve(order.size());
  for (std::size_t position = 0; position < order.size(); ++position) {
    ranked.push_back({order[position], position + 1, fronts[order[position]]});
  }
  return ranked;
}

void rank_variants(std::vector<VOVariant>& variants, const std::vector<PerformanceComponent>& components,
                   const RankingChoice& choice) {
  std::vector<Objective> objectives;
  for (std::size_t c = 0; c < components.size(); ++c) {
    const double weight = choice.weights.empty() ? components[c].weight : choice.weights.at(c);
    objectives.push_back({components[c].minimize, weight});
  }
  std::vector<std::size_t> priority;
  for (const auto& id : choice.priority) {
    auto it = std::find_if(components.begin(), components.end(), [&](const auto& c) { return c.id == id; });
    if (it == components.end()) throw Error(ErrorCode::kSpecInvalid, "unknown ranking priority '" + id + "'", id);
    priority.push_back(static_cast<std::size_t>(it - components.begin()));
  }
  std::vector<RankItem> items;
  items.reserve(variants.size());
  for (const auto& variant : variants) {
    RankItem item{variant.genome, {}};
    if (variant.performance) {
      item.values = variant.performance->values;
    } else {
      item.values.assign(components.size(), std::nullopt);
    }
    items.push_back(std::move(item));
  }
  const auto ranked = rank(items, objectives, choice.kind, priority);
  std::vector<VOVariant> ordered;
  ordered.reserve(variants.size());
  for (const auto& entry : ranked) {
    VOVariant variant = std::move(variants[entry.index]);
    variant.rank = entry.rank;
    variant.front = entry.front;
    ordered.push_back(std::move(variant));
  }
  variants = std::move(ordered);
}

}  // namespace mapss
