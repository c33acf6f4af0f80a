#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mapss/attribute.hpp"

namespace mapss {

enum class ElementKind { kPartner, kService };

std::string_view to_string(ElementKind kind);
std::optional<ElementKind> parse_element_kind(std::string_view token);

// Rows of the VO specification structure matrix.
enum class Aspect { kPartner, kService, kPartnerSubset, kServiceSubset, kProcess };

std::string_view to_string(Aspect aspect);
std::optional<Aspect> parse_aspect(std::string_view token);

// One preference-carrying requirement of a role. Numeric requirements use
// optimal/reject anchors; boolean, text and enum requirements score 1 on a
// match with `optimal` and 0 otherwise.
struct RoleRequirement {
  std::string path;
  AttributeValue optimal;
  std::optional<AttributeValue> reject;
  double weight = 1.0;
  bool mandatory = true;
  // Unset means the owning role's target kind.
  std::optional<Aspect> aspect;
  // Free-form provenance label (planner, customer, breeding environment).
  std::string source;

  bool operator==(const RoleRequirement&) const = default;
};

struct Role {
  std::string name;
  ElementKind target_kind = ElementKind::kPartner;
  std::vector<RoleRequirement> requirements;

  bool operator==(const Role&) const = default;
};

}  // namespace mapss
