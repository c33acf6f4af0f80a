#include "mapss/registry.hpp"

#include <algorithm>
#include <cmath>

#include "mapss/error.hpp"

namespace mapss {

std::string_view to_string(ElementKind kind) {
  return kind == ElementKind::kPartner ? "partner" : "service";
}

std::optional<ElementKind> parse_element_kind(std::string_view token) {
  if (token == "partner") return ElementKind::kPartner;
  if (token == "service") return ElementKind::kService;
  return std::nullopt;
}

std::string_view to_string(Aspect aspect) {
  switch (aspect) {
    case Aspect::kPartner: return "partner";
    case Aspect::kService: return "service";
    case Aspect::kPartnerSubset: return "partner_subset";
    case Aspect::kServiceSubset: return "service_subset";
    case Aspect::kProcess: return "process";
  }
  return "?";
}

std::optional<Aspect> parse_aspect(std::string_view token) {
  if (token == "partner") return Aspect::kPartner;
  if (token == "service") return Aspect::kService;
  if (token == "partner_subset") return Aspect::kPartnerSubset;
  if (token == "service_subset") return Aspect::kServiceSubset;
  if (token == "process") return Aspect::kProcess;
  return std::nullopt;
}

namespace {

constexpr std::string_view kProviderPrefix = "provider.";

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

// Splits "capability.workers" into ("capability", "workers").
std::pair<std::string_view, std::string_view> split_path(std::string_view path) {
  const auto dot = path.find('.');
  if (dot == std::string_view::npos) return {path, {}};
  return {path.substr(0, dot), path.substr(dot + 1)};
}

void push_flat(std::vector<AttributeValue>& out, const AttributeValue& value) {
  std::vector<const AttributeValue*> leaves;
  value.flatten_into(leaves);
  for (const auto* leaf : leaves) out.push_back(*leaf);
}

void push_map_value(std::vector<AttributeValue>& out,
                    const std::map<std::string, AttributeValue>& map, std::string_view key) {
  if (auto it = map.find(std::string(key)); it != map.end()) push_flat(out, it->second);
}

}  // namespace

void validate_path(std::string_view path) {
  if (starts_with(path, kProviderPrefix)) {
    const auto inner = path.substr(kProviderPrefix.size());
    if (starts_with(inner, kProviderPrefix)) {
      throw Error(ErrorCode::kMalformed, "nested provider paths are not supported", std::string(path));
    }
    validate_path(inner);
    return;
  }
  const auto [head, tail] = split_path(path);
  const bool plain = head == "id" || head == "name" || head == "kind" || head == "competence" ||
                     head == "competence_name" || head == "cost";
  const bool keyed = head == "attribute" || head == "capability" || head == "functional" ||
                     head == "non_functional";
  if (plain && tail.empty()) return;
  if (keyed && !tail.empty()) return;
  throw Error(ErrorCode::kMalformed, "unknown attribute path '" + std::string(path) + "'",
              std::string(path));
}

void validate_predicate(const Predicate& predicate) {
  validate_path(predicate.path);
  if (predicate.value.as_list() != nullptr) {
    throw Error(ErrorCode::kMalformed, "predicate value must be a scalar", predicate.path);
  }
  if (is_ordering(predicate.op) && predicate.value.as_number() == nullptr) {
    throw Error(ErrorCode::kMalformed, "ordering comparison requires a numeric value", predicate.path);
  }
}

void validate_requirement(const RoleRequirement& requirement) {
  validate_path(requirement.path);
  if (!(requirement.weight > 0.0) || !std::isfinite(requirement.weight)) {
    throw Error(ErrorCode::kMalformed, "requirement weight must be positive", requirement.path);
  }
  if (const auto* optimal = requirement.optimal.as_number()) {
    const Quantity* reject = requirement.reject ? requirement.reject->as_number() : nullptr;
    if (reject == nullptr) {
      throw Error(ErrorCode::kMalformed, "numeric requirement needs a numeric reject value",
                  requirement.path);
    }
    if (reject->unit != optimal->unit) {
      throw Error(ErrorCode::kUnitMismatch, "optimal and reject values carry different units",
                  requirement.path);
    }
    if (optimal->value == reject->value) {
      throw Error(ErrorCode::kMalformed, "optimal and reject values must differ", requirement.path);
    }
    return;
  }
  if (requirement.optimal.as_list() != nullptr) {
    throw Error(ErrorCode::kMalformed, "requirement optimal value must be a scalar", requirement.path);
  }
}

const Element* Registry::find(std::string_view id) const {
  auto it = elements_.find(id);
  return it == elements_.end() ? nullptr : &it->second;
}

const Element& Registry::get(std::string_view id) const {
  const auto* element = find(id);
  if (element == nullptr) {
    throw Error(ErrorCode::kNotFound, "unknown element '" + std::string(id) + "'", std::string(id));
  }
  return *element;
}

std::span<const CompetenceRecord> Registry::competences_of(std::string_view id) const {
  auto it = competences_.find(id);
  if (it == competences_.end()) return {};
  return it->second;
}

const ServiceDescription* Registry::service_description(std::string_view id) const {
  auto it = services_.find(id);
  return it == services_.end() ? nullptr : &it->second;
}

void Registry::check_descriptions(const Element& element,
                                  const std::vector<Description>& descriptions) const {
  if (element.id.empty()) throw Error(ErrorCode::kMalformed, "element id must not be empty");
  if (element.kind == ElementKind::kService) {
    if (!element.provider_id) {
      throw Error(ErrorCode::kMalformed, "service '" + element.id + "' needs a provider_id", element.id);
    }
    const auto* provider = find(*element.provider_id);
    if (provider == nullptr || provider->kind != ElementKind::kPartner) {
      throw Error(ErrorCode::kDanglingReference,
                  "dangling provider: '" + *element.provider_id + "' is not a registered partner",
                  *element.provider_id);
    }
  } else if (element.provider_id) {
    throw Error(ErrorCode::kMalformed, "partner '" + element.id + "' must not have a provider_id",
                element.id);
  }

  bool has_service_description = false;
  for (const auto& description : descriptions) {
    if (const auto* competence = std::get_if<CompetenceRecord>(&description)) {
      if (competence->owner_id != element.id) {
        throw Error(ErrorCode::kMalformed, "competence owner does not match element", element.id);
      }
      if (element.kind != ElementKind::kPartner) {
        throw Error(ErrorCode::kMalformed, "competence records describe partners only", element.id);
      }
      if (competence->competence_name.empty()) {
        throw Error(ErrorCode::kMalformed, "competence name must not be empty", element.id);
      }
      for (const auto& [resource, capacity] : competence->capabilities) {
        if (!(capacity.value >= 0.0)) {
          throw Error(ErrorCode::kMalformed, "capacity '" + resource + "' must be non-negative",
                      element.id);
        }
      }
    } else {
      const auto& service = std::get<ServiceDescription>(description);
      if (service.service_id != element.id || element.kind != ElementKind::kService) {
        throw Error(ErrorCode::kMalformed, "service description must describe this service element",
                    element.id);
      }
      if (has_service_description) {
        throw Error(ErrorCode::kMalformed, "at most one service description per service", element.id);
      }
      has_service_description = true;
    }
  }
}

void Registry::store_descriptions(const Element& element, std::vector<Description> descriptions) {
  competences_.erase(element.id);
  services_.erase(element.id);
  for (auto& description : descriptions) {
    if (auto* competence = std::get_if<CompetenceRecord>(&description)) {
      competences_[element.id].push_back(std::move(*competence));
    } else {
      services_[element.id] = std::move(std::get<ServiceDescription>(description));
    }
  }
}

const std::string& Registry::register_element(Element element, std::vector<Description> descriptions) {
  if (contains(element.id)) {
    throw Error(ErrorCode::kDuplicateId, "element '" + element.id + "' already registered", element.id);
  }
  check_descriptions(element, descriptions);
  store_descriptions(element, std::move(descriptions));
  auto [it, inserted] = elements_.emplace(element.id, std::move(element));
  return it->first;
}

void Registry::update_element(Element element, std::vector<Description> descriptions) {
  const auto* existing = find(element.id);
  if (existing == nullptr) {
    throw Error(ErrorCode::kNotFound, "unknown element '" + element.id + "'", element.id);
  }
  if (existing->kind != element.kind) {
    throw Error(ErrorCode::kMalformed, "element kind cannot change on update", element.id);
  }
  check_descriptions(element, descriptions);
  store_descriptions(element, std::move(descriptions));
  elements_[element.id] = std::move(element);
}

std::vector<AttributeValue> Registry::resolve(const Element& element, std::string_view path) const {
  std::vector<AttributeValue> out;
  if (starts_with(path, kProviderPrefix)) {
    if (element.provider_id) {
      if (const auto* provider = find(*element.provider_id)) {
        return resolve(*provider, path.substr(kProviderPrefix.size()));
      }
    }
    return out;
  }
  const auto [head, key] = split_path(path);
  if (head == "id") {
    out.push_back(AttributeValue::text(element.id));
  } else if (head == "name") {
    out.push_back(AttributeValue::text(element.name));
  } else if (head == "kind") {
    out.push_back(AttributeValue::enumeration(std::string(to_string(element.kind))));
  } else if (head == "attribute") {
    push_map_value(out, element.attributes, key);
  } else if (head == "competence" || head == "competence_name") {
    for (const auto& record : competences_of(element.id)) {
      out.push_back(AttributeValue::text(record.competence_name));
    }
  } else if (head == "capability") {
    for (const auto& record : competences_of(element.id)) {
      if (auto it = record.capabilities.find(std::string(key)); it != record.capabilities.end()) {
        out.push_back(AttributeValue(it->second));
      }
    }
  } else if (head == "cost") {
    for (const auto& record : competences_of(element.id)) out.push_back(AttributeValue(record.cost));
  } else if (head == "functional" || head == "non_functional") {
    if (const auto* service = service_description(element.id)) {
      push_map_value(out, head == "functional" ? service->functional : service->non_functional, key);
    }
  }
  return out;
}

bool Registry::satisfies(const Element& element, const Predicate& predicate) const {
  const auto values = resolve(element, predicate.path);
  const auto* expected_number = predicate.value.as_number();
  bool any = false;
  for (const auto& value : values) {
    bool hit = false;
    if (expected_number != nullptr) {
      const auto* observed = value.as_number();
      if (observed == nullptr) continue;
      if (observed->unit != expected_number->unit) {
        throw Error(ErrorCode::kUnitMismatch,
                    "unit mismatch on '" + predicate.path + "': '" + observed->unit + "' vs '" +
                        expected_number->unit + "'",
                    predicate.path);
      }
      hit = compare(observed->value, predicate.op, expected_number->value);
    } else if (predicate.op == CompareOp::kEq) {
      hit = scalar_matches(value, predicate.value);
    } else {
      hit = !scalar_matches(value, predicate.value);
    }
    any = any || hit;
  }
  return any;
}

std::vector<const Element*> Registry::search(const SearchQuery& query) const {
  for (const auto& predicate : query.where) validate_predicate(predicate);
  std::vector<const Element*> result;
  for (const auto& [id, element] : elements_) {
    if (query.kind && element.kind != *query.kind) continue;
    // Every predicate is evaluated so unit mismatches surface deterministically.
    bool all = true;
    for (const auto& predicate : query.where) all = satisfies(element, predicate) && all;
    if (all) result.push_back(&element);
  }
  return result;
}

std::optional<double> Registry::requirement_degree(const Element& element,
                                                   const RoleRequirement& requirement) const {
  const auto values = resolve(element, requirement.path);
  std::optional<double> best;
  if (const auto* optimal = requirement.optimal.as_number()) {
    const auto* reject = requirement.reject->as_number();
    for (const auto& value : values) {
      const auto* observed = value.as_number();
      if (observed == nullptr) continue;
      if (observed->unit != optimal->unit) {
        throw Error(ErrorCode::kUnitMismatch,
                    "unit mismatch on '" + requirement.path + "' for element '" + element.id + "'",
                    requirement.path);
      }
      const double degree = interpolate_degree(observed->value, optimal->value, reject->value);
      best = std::max(best.value_or(0.0), degree);
    }
  } else {
    for (const auto& value : values) {
      const double degree = scalar_matches(value, requirement.optimal) ? 1.0 : 0.0;
      best = std::max(best.value_or(0.0), degree);
    }
  }
  if (!best && requirement.mandatory) return 0.0;
  return best;
}

double Registry::evaluate_conformance(const Element& element, const Role& role) const {
  for (const auto& requirement : role.requirements) validate_requirement(requirement);
  double weighted = 0.0;
  double total_weight = 0.0;
  for (const auto& requirement : role.requirements) {
    const auto degree = requirement_degree(element, requirement);
    if (!degree) continue;
    weighted += requirement.weight * *degree;
    total_weight += requirement.weight;
  }
  if (total_weight == 0.0) return 1.0;
  return std::clamp(weighted / total_weight, 0.0, 1.0);
}

std::vector<CompetenceRecord> Registry::all_competences() const {
  std::vector<CompetenceRecord> out;
  for (const auto& [id, records] : competences_) out.insert(out.end(), records.begin(), records.end());
  return out;
}

std::vector<ServiceDescription> Registry::all_services() const {
  std::vector<ServiceDescription> out;
  for (const auto& [id, service] : services_) out.push_back(service);
  return out;
}

}  // namespace mapss
