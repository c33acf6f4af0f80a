#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mapss/attribute.hpp"
#include "mapss/role.hpp"

namespace mapss {

struct Element {
  std::string id;
  ElementKind kind = ElementKind::kPartner;
  std::string name;
  std::optional<std::string> provider_id;
  std::map<std::string, AttributeValue> attributes;

  bool operator==(const Element&) const = default;
};

struct Evidence {
  std::string reference;
  std::string issued;

  bool operator==(const Evidence&) const = default;
};

// 4-C competence description: competence name, capability (capacities),
// cost and conspicuity (evidence).
struct CompetenceRecord {
  std::string owner_id;
  std::string competence_name;
  std::map<std::string, Quantity> capabilities;
  Quantity cost;
  std::vector<Evidence> conspicuity;

  bool operator==(const CompetenceRecord&) const = default;
};

struct ServiceDescription {
  std::string service_id;
  std::map<std::string, AttributeValue> functional;
  std::map<std::string, AttributeValue> non_functional;

  bool operator==(const ServiceDescription&) const = default;
};

using Description = std::variant<CompetenceRecord, ServiceDescription>;

struct Predicate {
  std::string path;
  CompareOp op = CompareOp::kEq;
  AttributeValue value;
};

struct SearchQuery {
  std::optional<ElementKind> kind;
  std::vector<Predicate> where;
};

// Attribute paths understood by search and conformance evaluation:
//   id | name | kind | attribute.<name>
//   competence | capability.<resource> | cost          (partners)
//   functional.<name> | non_functional.<name>          (services)
//   provider.<path>                                    (services; resolves on the provider)
// Throws Error(kMalformed) for anything else.
void validate_path(std::string_view path);

// Throws Error(kMalformed) when the predicate cannot be evaluated.
void validate_predicate(const Predicate& predicate);

class Registry {
 public:
  // Throws kDuplicateId, kDanglingReference or kMalformed.
  const std::string& register_element(Element element, std::vector<Description> descriptions = {});

  // Replaces the element and all of its descriptions. The kind is immutable.
  void update_element(Element element, std::vector<Description> descriptions = {});

  const Element* find(std::string_view id) const;
  const Element& get(std::string_view id) const;
  bool contains(std::string_view id) const { return find(id) != nullptr; }

  std::span<const CompetenceRecord> competences_of(std::string_view id) const;
  const ServiceDescription* service_description(std::string_view id) const;

  // Every value reachable from `element` under `path`, lists flattened.
  std::vector<AttributeValue> resolve(const Element& element, std::string_view path) const;

  // Elements satisfying every predicate, ordered by id. Throws kUnitMismatch
  // when a numeric predicate meets a value with a different unit tag.
  std::vector<const Element*> search(const SearchQuery& query) const;

  bool satisfies(const Element& element, const Predicate& predicate) const;

  // Weighted mean of per-requirement satisfaction degrees in [0, 1].
  double evaluate_conformance(const Element& element, const Role& role) const;

  // Degree of a single requirement, or nullopt when an optional requirement's
  // attribute is absent (the requirement is then left out of the mean).
  std::optional<double> requirement_degree(const Element& element,
                                           const RoleRequirement& requirement) const;

  const std::map<std::string, Element, std::less<>>& elements() const { return elements_; }
  std::vector<CompetenceRecord> all_competences() const;
  std::vector<ServiceDescription> all_services() const;
  std::size_t size() const { return elements_.size(); }

  bool operator==(const Registry&) const = default;

 private:
  void check_descriptions(const Element& element, const std::vector<Description>& descriptions) const;
  void store_descriptions(const Element& element, std::vector<Description> descriptions);

  std::map<std::string, Element, std::less<>> elements_;
  std::map<std::string, std::vector<CompetenceRecord>, std::less<>> competences_;
  std::map<std::string, ServiceDescription, std::less<>> services_;
};

// Throws kMalformed for requirements that cannot be scored.
void validate_requirement(const RoleRequirement& requirement);

}  // namespace mapss
