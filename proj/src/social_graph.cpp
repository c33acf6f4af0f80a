#include "mapss/social_graph.hpp"

#include <algorithm>
#include <cmath>

#include "mapss/error.hpp"
#include "mapss/registry.hpp"

namespace mapss {

std::string_view to_string(Direction direction) {
  return direction == Direction::kDirected ? "directed" : "either";
}

std::optional<Direction> parse_direction(std::string_view token) {
  if (token == "directed") return Direction::kDirected;
  if (token == "either") return Direction::kEither;
  return std::nullopt;
}

void validate_social_requirement(const SocialRequirement& requirement) {
  if (requirement.relation_type.empty()) {
    throw Error(ErrorCode::kMalformed, "social requirement needs a relation type", requirement.id);
  }
  if (!(requirement.weight > 0.0) || !std::isfinite(requirement.weight)) {
    throw Error(ErrorCode::kMalformed, "social requirement weight must be positive", requirement.id);
  }
  if (const auto& condition = requirement.attribute_condition) {
    if (condition->attribute.empty() || condition->optimal.value == condition->reject.value) {
      throw Error(ErrorCode::kMalformed, "attribute condition needs distinct optimal and reject values",
                  requirement.id);
    }
    if (condition->optimal.unit != condition->reject.unit) {
      throw Error(ErrorCode::kUnitMismatch, "attribute condition units differ", requirement.id);
    }
  }
}

const std::string& SocialGraph::add_relation(Relation relation, const Registry& registry) {
  if (relation.id.empty()) throw Error(ErrorCode::kMalformed, "relation id must not be empty");
  if (relation.type.empty()) {
    throw Error(ErrorCode::kMalformed, "relation type must not be empty", relation.id);
  }
  if (relations_.contains(relation.id)) {
    throw Error(ErrorCode::kDuplicateId, "relation '" + relation.id + "' already exists", relation.id);
  }
  for (const auto* endpoint : {&relation.source, &relation.target}) {
    if (!registry.contains(*endpoint)) {
      throw Error(ErrorCode::kDanglingReference,
                  "dangling endpoint: '" + *endpoint + "' is not a registered element", *endpoint);
    }
  }
  by_endpoints_[{relation.source, relation.target}].push_back(relation.id);
  auto [it, inserted] = relations_.emplace(relation.id, std::move(relation));
  return it->first;
}

const Relation* SocialGraph::find(std::string_view id) const {
  auto it = relations_.find(id);
  return it == relations_.end() ? nullptr : &it->second;
}

std::vector<const Relation*> SocialGraph::relations(const RelationFilter& filter) const {
  std::vector<const Relation*> out;
  for (const auto& [id, relation] : relations_) {
    if (filter.type && relation.type != *filter.type) continue;
    if (filter.endpoint && relation.source != *filter.endpoint && relation.target != *filter.endpoint) {
      continue;
    }
    out.push_back(&relation);
  }
  return out;
}

std::vector<const Relation*> SocialGraph::between(std::string_view source, std::string_view target) const {
  std::vector<const Relation*> out;
  auto it = by_endpoints_.find({std::string(source), std::string(target)});
  if (it == by_endpoints_.end()) return out;
  for (const auto& id : it->second) out.push_back(find(id));
  return out;
}

double relation_degree(const SocialRequirement& requirement, const Relation& relation) {
  if (relation.type != requirement.relation_type) return 0.0;
  const auto& condition = requirement.attribute_condition;
  if (!condition) return 1.0;
  auto it = relation.attributes.find(condition->attribute);
  if (it == relation.attributes.end()) return 0.0;
  std::vector<const AttributeValue*> leaves;
  it->second.flatten_into(leaves);
  double best = 0.0;
  for (const auto* leaf : leaves) {
    const auto* observed = leaf->as_number();
    if (observed == nullptr) continue;
    if (observed->unit != condition->optimal.unit) {
      throw Error(ErrorCode::kUnitMismatch,
                  "unit mismatch on relation attribute '" + condition->attribute + "'", relation.id);
    }
    best = std::max(best, interpolate_degree(observed->value, condition->optimal.value,
                                             condition->reject.value));
  }
  return best;
}

namespace {

const std::string& assigned(const Assignment& assignment, const std::string& role,
                            const std::string& requirement_id) {
  auto it = assignment.find(role);
  if (it == assignment.end()) {
    throw Error(ErrorCode::kInvalidArgument,
                "assignment does not cover role '" + role + "' needed by '" + requirement_id + "'", role);
  }
  return it->second;
}

}  // namespace

double SocialGraph::evaluate_requirement(const SocialRequirement& requirement,
                                         const Assignment& assignment) const {
  const auto& first = assigned(assignment, requirement.between.first, requirement.id);
  const auto& second = assigned(assignment, requirement.between.second, requirement.id);
  double best = 0.0;
  auto scan = [&](const std::string& source, const std::string& target) {
    for (const auto* relation : between(source, target)) {
      best = std::max(best, relation_degree(requirement, *relation));
    }
  };
  scan(first, second);
  if (requirement.direction == Direction::kEither && first != second) scan(second, first);
  return best;
}

SchemaEvaluation SocialGraph::evaluate_schema(const SocialNetworkSchema& schema,
                                              const Assignment& assignment) const {
  for (const auto& role : schema.roles) {
    if (!assignment.contains(role)) {
      throw Error(ErrorCode::kInvalidArgument, "assignment does not cover role '" + role + "'", role);
    }
  }
  SchemaEvaluation result;
  double weighted = 0.0;
  double total_weight = 0.0;
  for (const auto& requirement : schema.requirements) {
    validate_social_requirement(requirement);
    const double degree = evaluate_requirement(requirement, assignment);
    result.breakdown.push_back({requirement.id, degree});
    weighted += requirement.weight * degree;
    total_weight += requirement.weight;
  }
  result.degree = total_weight == 0.0 ? 1.0 : std::clamp(weighted / total_weight, 0.0, 1.0);
  return result;
}

}  // namespace mapss
