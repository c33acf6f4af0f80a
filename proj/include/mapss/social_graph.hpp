#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mapss/attribute.hpp"
#include "mapss/role.hpp"

namespace mapss {

class Registry;

struct Relation {
  std::string id;
  std::string type;
  std::string source;
  std::string target;
  std::map<std::string, AttributeValue> attributes;

  bool operator==(const Relation&) const = default;
};

enum class Direction { kDirected, kEither };

std::string_view to_string(Direction direction);
std::optional<Direction> parse_direction(std::string_view token);

struct AttributeCondition {
  std::string attribute;
  Quantity optimal;
  Quantity reject;

  bool operator==(const AttributeCondition&) const = default;
};

// Requirement on the relations between the elements assigned to two roles.
struct SocialRequirement {
  std::string id;
  std::pair<std::string, std::string> between;
  std::string relation_type;
  Direction direction = Direction::kEither;
  std::optional<AttributeCondition> attribute_condition;
  double weight = 1.0;
  // Unset: derived from the kinds of the two roles.
  std::optional<Aspect> aspect;

  bool operator==(const SocialRequirement&) const = default;
};

struct SocialNetworkSchema {
  std::vector<std::string> roles;
  std::vector<SocialRequirement> requirements;

  bool operator==(const SocialNetworkSchema&) const = default;
};

// Role name -> element id.
using Assignment = std::map<std::string, std::string, std::less<>>;

struct RequirementDegree {
  std::string requirement_id;
  double degree = 0.0;

  bool operator==(const RequirementDegree&) const = default;
};

struct SchemaEvaluation {
  double degree = 1.0;
  std::vector<RequirementDegree> breakdown;
};

struct RelationFilter {
  std::optional<std::string> type;
  // Matches relations having this element at either end.
  std::optional<std::string> endpoint;
};

class SocialGraph {
 public:
  // Throws kDanglingReference, kDuplicateId or kMalformed.
  const std::string& add_relation(Relation relation, const Registry& registry);

  const Relation* find(std::string_view id) const;
  std::vector<const Relation*> relations(const RelationFilter& filter = {}) const;

  // Relations from `source` to `target` (one direction only).
  std::vector<const Relation*> between(std::string_view source, std::string_view target) const;

  double evaluate_requirement(const SocialRequirement& requirement, const Assignment& assignment) const;
  SchemaEvaluation evaluate_schema(const SocialNetworkSchema& schema, const Assignment& assignment) const;

  const std::map<std::string, Relation, std::less<>>& all() const { return relations_; }
  std::size_t size() const { return relations_.size(); }

  bool operator==(const SocialGraph& other) const { return relations_ == other.relations_; }

 private:
  std::map<std::string, Relation, std::less<>> relations_;
  std::map<std::pair<std::string, std::string>, std::vector<std::string>> by_endpoints_;
};

// Degree a single relation contributes toward a requirement (ignores endpoints).
double relation_degree(const SocialRequirement& requirement, const Relation& relation);

// Throws kMalformed for requirements that cannot be evaluated.
void validate_social_requirement(const SocialRequirement& requirement);

}  // namespace mapss
