#include "support/oracles.hpp"

#include <algorithm>
#include <functional>
#include <set>

namespace mapss::test {

double oracle_degree(double observed, double optimal, double reject) {
  if (optimal > reject) {
    if (observed >= optimal) return 1.0;
    if (observed <= reject) return 0.0;
  } else {
    if (observed <= optimal) return 1.0;
    if (observed >= reject) return 0.0;
  }
  return (observed - reject) / (optimal - reject);
}

double oracle_requirement(const SocialRequirement& requirement, const std::vector<Relation>& relations,
                          const std::map<std::string, std::string>& assignment) {
  const std::string& a = assignment.at(requirement.between.first);
  const std::string& b = assignment.at(requirement.between.second);
  double best = 0.0;
  for (const auto& r : relations) {
    if (r.type != requirement.relation_type) continue;
    const bool forward = r.source == a && r.target == b;
    const bool backward = r.source == b && r.target == a;
    if (!forward && !(requirement.direction == Direction::kEither && backward)) continue;
    double degree = 1.0;
    if (requirement.attribute_condition) {
      const auto& c = *requirement.attribute_condition;
      auto it = r.attributes.find(c.attribute);
      if (it == r.attributes.end() || it->second.as_number() == nullptr) {
        degree = 0.0;
      } else {
        degree = oracle_degree(it->second.as_number()->value, c.optimal.value, c.reject.value);
      }
    }
    best = std::max(best, degree);
  }
  return best;
}

double oracle_schema(const SocialNetworkSchema& schema, const std::vector<Relation>& relations,
                     const std::map<std::string, std::string>& assignment) {
  if (schema.requirements.empty()) return 1.0;
  double weighted = 0.0;
  double total = 0.0;
  for (const auto& requirement : schema.requirements) {
    weighted += requirement.weight * oracle_requirement(requirement, relations, assignment);
    total += requirement.weight;
  }
  return weighted / total;
}

double oracle_longest_path(const std::vector<double>& weights,
                           const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  const std::size_t n = weights.size();
  std::vector<bool> has_incoming(n, false);
  for (const auto& [from, to] : edges) has_incoming[to] = true;
  double best = 0.0;
  std::vector<std::size_t> path;
  std::function<void(std::size_t)> walk = [&](std::size_t node) {
    path.push_back(node);
    bool extended = false;
    for (const auto& [from, to] : edges) {
      if (from == node) {
        extended = true;
        walk(to);
      }
    }
    if (!extended) {
      double sum = 0.0;
      for (auto v : path) sum += weights[v];
      best = std::max(best, sum);
    }
    path.pop_back();
  };
  for (std::size_t v = 0; v < n; ++v) {
    if (!has_incoming[v]) walk(v);
  }
  return best;
}

std::vector<std::vector<std::string>> oracle_all_genomes(const std::vector<std::vector<std::string>>& pools,
                                                         const std::vector<bool>& exclusive) {
  std::vector<std::vector<std::string>> out{{}};
  for (const auto& pool : pools) {
    std::vector<std::vector<std::string>> longer;
    for (const auto& prefix : out) {
      for (const auto& element : pool) {
        auto g = prefix;
        g.push_back(element);
        longer.push_back(std::move(g));
      }
    }
    out = std::move(longer);
  }
  if (exclusive.empty()) return out;
  std::vector<std::vector<std::string>> feasible;
  for (const auto& g : out) {
    std::set<std::string> seen;
    bool ok = true;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (exclusive[i] && !seen.insert(g[i]).second) ok = false;
    }
    if (ok) feasible.push_back(g);
  }
  return feasible;
}

bool oracle_dominates(const std::vector<double>& a, const std::vector<double>& b, const std::vector<bool>& minimize) {
  bool strictly = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool a_better = minimize[i] ? a[i] < b[i] : a[i] > b[i];
    const bool b_better = minimize[i] ? b[i] < a[i] : b[i] > a[i];
    if (b_better) return false;
    if (a_better) strictly = true;
  }
  return strictly;
}

std::vector<std::size_t> oracle_non_dominated(const std::vector<std::vector<double>>& vectors,
                                              const std::vector<bool>& minimize) {
  std::vector<std::size_t> front;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < vectors.size(); ++j) {
      if (i != j && oracle_dominates(vectors[j], vectors[i], minimize)) dominated = true;
    }
    if (!dominated) front.push_back(i);
  }
  return front;
}

}  // namespace mapss::test
