#include "mapss/json_io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace mapss {

namespace {

[[noreturn]] void malformed(const std::string& message, const std::string& where = {}) {
  throw Error(ErrorCode::kMalformed, message, where);
}

const Json& need(const Json& j, const char* key) {
  if (!j.is_object()) malformed("expected an object holding '" + std::string(key) + "'", key);
  auto it = j.find(key);
  if (it == j.end()) malformed("missing field '" + std::string(key) + "'", key);
  return *it;
}

std::string need_string(const Json& j, const char* key) {
  const auto& value = need(j, key);
  if (!value.is_string()) malformed("field '" + std::string(key) + "' must be a string", key);
  return value.get<std::string>();
}

double need_number(const Json& j, const char* key) {
  const auto& value = need(j, key);
  if (!value.is_number()) malformed("field '" + std::string(key) + "' must be a number", key);
  return value.get<double>();
}

template <typename T>
T value_or(const Json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    malformed("field '" + std::string(key) + "' has the wrong type", key);
  }
}

std::optional<std::string> optional_string(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) malformed("field '" + std::string(key) + "' must be a string", key);
  return it->get<std::string>();
}

template <typename Enum, typename Parser>
Enum parse_token(const Json& j, const char* key, Parser parse) {
  const auto token = need_string(j, key);
  const auto parsed = parse(token);
  if (!parsed) malformed("unknown " + std::string(key) + " '" + token + "'", key);
  return *parsed;
}

std::map<std::string, AttributeValue> attribute_map(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return {};
  if (!it->is_object()) malformed("field '" + std::string(key) + "' must be an object", key);
  std::map<std::string, AttributeValue> out;
  for (const auto& [name, value] : it->items()) out.emplace(name, value.get<AttributeValue>());
  return out;
}

// Numbers in requirement documents may be bare; `unit` then supplies the tag.
AttributeValue loose_value(const Json& j, const std::string& unit) {
  if (j.is_number()) return AttributeValue::number(j.get<double>(), unit);
  return j.get<AttributeValue>();
}

}  // namespace

void to_json(Json& j, const Quantity& value) { j = Json{{"value", value.value}, {"unit", value.unit}}; }

void from_json(const Json& j, Quantity& value) {
  if (j.is_number()) {
    value = {j.get<double>(), {}};
    return;
  }
  value.value = need_number(j, "value");
  value.unit = value_or<std::string>(j, "unit", "");
}

void to_json(Json& j, const AttributeValue& value) {
  j = Json{{"type", std::string(value.type_name())}};
  if (const auto* number = value.as_number()) {
    j["value"] = number->value;
    if (!number->unit.empty()) j["unit"] = number->unit;
  } else if (const auto* text = value.as_text()) {
    j["value"] = *text;
  } else if (const auto* flag = value.as_bool()) {
    j["value"] = *flag;
  } else if (const auto* token = value.as_enum()) {
    j["value"] = token->token;
  } else {
    Json items = Json::array();
    for (const auto& item : *value.as_list()) items.push_back(item);
    j["value"] = std::move(items);
  }
}

void from_json(const Json& j, AttributeValue& value) {
  if (j.is_number()) {
    value = AttributeValue::number(j.get<double>());
  } else if (j.is_string()) {
    value = AttributeValue::text(j.get<std::string>());
  } else if (j.is_boolean()) {
    value = AttributeValue::boolean(j.get<bool>());
  } else if (j.is_array()) {
    AttributeList items;
    for (const auto& item : j) items.push_back(item.get<AttributeValue>());
    value = AttributeValue::list(std::move(items));
  } else if (j.is_object()) {
    const auto type = need_string(j, "type");
    const auto& raw = need(j, "value");
    if (type == "number") {
      if (!raw.is_number()) malformed("number attribute needs a numeric value", "value");
      value = AttributeValue::number(raw.get<double>(), value_or<std::string>(j, "unit", ""));
    } else if (type == "text" && raw.is_string()) {
      value = AttributeValue::text(raw.get<std::string>());
    } else if (type == "bool" && raw.is_boolean()) {
      value = AttributeValue::boolean(raw.get<bool>());
    } else if (type == "enum" && raw.is_string()) {
      value = AttributeValue::enumeration(raw.get<std::string>());
    } else if (type == "list" && raw.is_array()) {
      AttributeList items;
      for (const auto& item : raw) items.push_back(item.get<AttributeValue>());
      value = AttributeValue::list(std::move(items));
    } else {
      malformed("attribute of type '" + type + "' has an incompatible value", "value");
    }
  } else {
    malformed("attribute value must be a scalar, array or {type, value} object");
  }
}

void to_json(Json& j, const Element& value) {
  j = Json{{"id", value.id}, {"kind", std::string(to_string(value.kind))}, {"name", value.name}};
  if (value.provider_id) j["provider_id"] = *value.provider_id;
  j["attributes"] = Json::object();
  for (const auto& [name, attribute] : value.attributes) j["attributes"][name] = attribute;
}

void from_json(const Json& j, Element& value) {
  value.id = need_string(j, "id");
  value.kind = parse_token<ElementKind>(j, "kind", parse_element_kind);
  value.name = value_or<std::string>(j, "name", "");
  value.provider_id = optional_string(j, "provider_id");
  value.attributes = attribute_map(j, "attributes");
}

void to_json(Json& j, const Evidence& value) { j = Json{{"reference", value.reference}, {"issued", value.issued}}; }

void from_json(const Json& j, Evidence& value) {
  value.reference = need_string(j, "reference");
  value.issued = value_or<std::string>(j, "issued", "");
}

void to_json(Json& j, const CompetenceRecord& value) {
  j = Json{{"owner_id", value.owner_id},
           {"competence_name", value.competence_name},
           {"capabilities", value.capabilities},
           {"cost", value.cost},
           {"conspicuity", value.conspicuity}};
}

void from_json(const Json& j, CompetenceRecord& value) {
  value.owner_id = need_string(j, "owner_id");
  value.competence_name = need_string(j, "competence_name");
  value.capabilities = value_or<std::map<std::string, Quantity>>(j, "capabilities", {});
  value.cost = value_or<Quantity>(j, "cost", {});
  value.conspicuity = value_or<std::vector<Evidence>>(j, "conspicuity", {});
}

void to_json(Json& j, const ServiceDescription& value) {
  j = Json{{"service_id", value.service_id}, {"functional", Json::object()}, {"non_functional", Json::object()}};
  for (const auto& [name, attribute] : value.functional) j["functional"][name] = attribute;
  for (const auto& [name, attribute] : value.non_functional) j["non_functional"][name] = attribute;
}

void from_json(const Json& j, ServiceDescription& value) {
  value.service_id = need_string(j, "service_id");
  value.functional = attribute_map(j, "functional");
  value.non_functional = attribute_map(j, "non_functional");
}

void to_json(Json& j, const Predicate& value) {
  j = Json{{"path", value.path}, {"op", std::string(to_string(value.op))}, {"value", value.value}};
}

void from_json(const Json& j, Predicate& value) {
  value.path = need_string(j, "path");
  value.op = parse_token<CompareOp>(j, "op", parse_compare_op);
  value.value = loose_value(need(j, "value"), value_or<std::string>(j, "unit", ""));
}

void to_json(Json& j, const SearchQuery& value) {
  j = Json{{"where", value.where}};
  if (value.kind) j["kind"] = std::string(to_string(*value.kind));
}

void from_json(const Json& j, SearchQuery& value) {
  value.kind.reset();
  if (j.contains("kind") && !j["kind"].is_null()) value.kind = parse_token<ElementKind>(j, "kind", parse_element_kind);
  value.where = value_or<std::vector<Predicate>>(j, "where", {});
}

void to_json(Json& j, const Relation& value) {
  j = Json{{"id", value.id}, {"type", value.type}, {"source", value.source}, {"target", value.target},
           {"attributes", Json::object()}};
  for (const auto& [name, attribute] : value.attributes) j["attributes"][name] = attribute;
}

void from_json(const Json& j, Relation& value) {
  value.id = need_string(j, "id");
  value.type = need_string(j, "type");
  value.source = need_string(j, "source");
  value.target = need_string(j, "target");
  value.attributes = attribute_map(j, "attributes");
}

void to_json(Json& j, const SocialRequirement& value) {
  j = Json{{"id", value.id},
           {"between", Json::array({value.between.first, value.between.second})},
           {"relation_type", value.relation_type},
           {"direction", std::string(to_string(value.direction))},
           {"weight", value.weight}};
  if (const auto& c = value.attribute_condition) {
    j["attribute_condition"] = Json{{"attribute", c->attribute}, {"optimal", c->optimal.value},
                                    {"reject", c->reject.value}, {"unit", c->optimal.unit}};
  }
  if (value.aspect) j["aspect"] = std::string(to_string(*value.aspect));
}

void from_json(const Json& j, SocialRequirement& value) {
  value.id = need_string(j, "id");
  const auto& between = need(j, "between");
  if (!between.is_array() || between.size() != 2 || !between[0].is_string() || !between[1].is_string()) {
    malformed("'between' must name exactly two roles", "between");
  }
  value.between = {between[0].get<std::string>(), between[1].get<std::string>()};
  value.relation_type = need_string(j, "relation_type");
  value.direction = j.contains("direction") ? parse_token<Direction>(j, "direction", parse_direction)
                                            : Direction::kEither;
  value.weight = value_or<double>(j, "weight", 1.0);
  value.attribute_condition.reset();
  if (auto it = j.find("attribute_condition"); it != j.end() && !it->is_null()) {
    const auto unit = value_or<std::string>(*it, "unit", "");
    value.attribute_condition = AttributeCondition{need_string(*it, "attribute"),
                                                   {need_number(*it, "optimal"), unit},
                                                   {need_number(*it, "reject"), unit}};
  }
  value.aspect.reset();
  if (j.contains("aspect")) value.aspect = parse_token<Aspect>(j, "aspect", parse_aspect);
}

void to_json(Json& j, const SocialNetworkSchema& value) {
  j = Json{{"roles", value.roles}, {"requirements", value.requirements}};
}

void from_json(const Json& j, SocialNetworkSchema& value) {
  value.requirements = value_or<std::vector<SocialRequirement>>(j, "requirements", {});
  if (j.contains("roles")) {
    value.roles = value_or<std::vector<std::string>>(j, "roles", {});
  } else {
    std::set<std::string> roles;
    for (const auto& requirement : value.requirements) {
      roles.insert(requirement.between.first);
      roles.insert(requirement.between.second);
    }
    value.roles.assign(roles.begin(), roles.end());
  }
}

void to_json(Json& j, const RequirementDegree& value) {
  j = Json{{"requirement", value.requirement_id}, {"degree", value.degree}};
}

namespace {

Json query_to_json(const DataQuery& query) {
  Json j;
  if (const auto* elements = std::get_if<ElementSource>(&query.source)) {
    j["source"] = "elements";
    if (elements->kind) j["kind"] = std::string(to_string(*elements->kind));
    j["where"] = elements->where;
  } else {
    const auto& relations = std::get<RelationSource>(query.source);
    j["source"] = "relations";
    if (relations.type) j["type"] = *relations.type;
    if (relations.endpoint) j["endpoint"] = *relations.endpoint;
    Json where = Json::array();
    for (const auto& p : relations.where) {
      where.push_back(Json{{"attribute", p.attribute}, {"op", std::string(to_string(p.op))}, {"value", p.value}});
    }
    j["where"] = std::move(where);
  }
  if (query.projection) j["project"] = *query.projection;
  j["scope"] = query.scope == QueryScope::kMembers ? "members" : "all";
  return j;
}

DataQuery parse_query(const Json& j, const std::string& at) {
  auto fail = [&](const std::string& message, const std::string& where) {
    throw Error(ErrorCode::kMalformed, message + " at '" + where + "'", where);
  };
  if (!j.is_object()) fail("query must be an object", at);
  DataQuery query;
  try {
    const auto source = value_or<std::string>(j, "source", "");
    if (source == "elements") {
      ElementSource elements;
      if (j.contains("kind")) elements.kind = parse_token<ElementKind>(j, "kind", parse_element_kind);
      elements.where = value_or<std::vector<Predicate>>(j, "where", {});
      query.source = std::move(elements);
    } else if (source == "relations") {
      RelationSource relations;
      relations.type = optional_string(j, "type");
      relations.endpoint = optional_string(j, "endpoint");
      if (auto it = j.find("where"); it != j.end()) {
        if (!it->is_array()) fail("'where' must be an array", at + "/where");
        for (const auto& p : *it) {
          relations.where.push_back({need_string(p, "attribute"), parse_token<CompareOp>(p, "op", parse_compare_op),
                                     loose_value(need(p, "value"), value_or<std::string>(p, "unit", ""))});
        }
      }
      query.source = std::move(relations);
    } else {
      fail("query source must be 'elements' or 'relations'", at + "/source");
    }
    query.projection = optional_string(j, "project");
    const auto scope = value_or<std::string>(j, "scope", "all");
    if (scope != "all" && scope != "members") fail("scope must be 'all' or 'members'", at + "/scope");
    query.scope = scope == "members" ? QueryScope::kMembers : QueryScope::kAll;
  } catch (const Error& error) {
    if (error.detail().starts_with(at)) throw;
    fail(error.what(), at);
  }
  return query;
}

}  // namespace

void to_json(Json& j, const IndicatorExpr& value) {
  switch (value.op) {
    case ExprOp::kLiteral:
      j = Json{{"op", "lit"}, {"value", value.literal}};
      return;
    case ExprOp::kCompare:
      j = Json{{"op", std::string(to_string(value.comparison))}};
      break;
    default:
      j = Json{{"op", std::string(to_string(value.op))}};
      break;
  }
  if (value.query) {
    j["query"] = query_to_json(*value.query);
  } else {
    Json args = Json::array();
    for (const auto& arg : value.args) args.push_back(arg);
    j["args"] = std::move(args);
  }
}

IndicatorExpr parse_expression(const Json& j, const std::string& at) {
  const std::string where = at.empty() ? "/" : at;
  auto fail = [&](const std::string& message, const std::string& pointer) {
    throw Error(ErrorCode::kMalformed, message + " at '" + pointer + "'", pointer);
  };
  IndicatorExpr expr;
  if (j.is_number()) {
    expr.literal = j.get<double>();
    return expr;
  }
  if (!j.is_object()) fail("expression must be an object or a number", where);
  auto op_it = j.find("op");
  if (op_it == j.end() || !op_it->is_string()) fail("expression needs an 'op' string", at + "/op");
  const auto token = op_it->get<std::string>();
  const auto op = parse_expr_op(token);
  if (!op) fail("unknown operator '" + token + "'", at + "/op");
  expr.op = *op;
  if (expr.op == ExprOp::kCompare) expr.comparison = *parse_compare_op(token);
  if (expr.op == ExprOp::kLiteral) {
    auto it = j.find("value");
    if (it == j.end() || !it->is_number()) fail("literal needs a numeric 'value'", at + "/value");
    expr.literal = it->get<double>();
  } else if (is_aggregate(expr.op)) {
    auto it = j.find("query");
    if (it == j.end()) fail("aggregate needs a query", at + "/query");
    expr.query = parse_query(*it, at + "/query");
  } else {
    auto it = j.find("args");
    if (it == j.end() || !it->is_array()) fail("operator needs an 'args' array", at + "/args");
    for (std::size_t i = 0; i < it->size(); ++i) {
      expr.args.push_back(parse_expression((*it)[i], at + "/args/" + std::to_string(i)));
    }
  }
  type_check(expr, at);
  return expr;
}

void to_json(Json& j, const DataQuery& value) { j = query_to_json(value); }

void to_json(Json& j, const Indicator& value) {
  j = Json{{"id", value.id}, {"name", value.name}, {"expression", value.expression}, {"subscribers", value.subscribers}};
  if (value.alarm) {
    j["alarm"] = Json{{"op", std::string(to_string(value.alarm->op))}, {"threshold", value.alarm->threshold}};
  }
}

void from_json(const Json& j, Indicator& value) {
  value.id = need_string(j, "id");
  value.name = value_or<std::string>(j, "name", value.id);
  value.expression = parse_expression(need(j, "expression"), "/expression");
  value.subscribers = value_or<std::vector<std::string>>(j, "subscribers", {});
  value.alarm.reset();
  if (auto it = j.find("alarm"); it != j.end() && !it->is_null()) {
    value.alarm = Alarm{parse_token<CompareOp>(*it, "op", parse_compare_op), need_number(*it, "threshold")};
  }
}

void to_json(Json& j, const IndicatorValue& value) {
  j = Json{{"available", value.available()}};
  j["value"] = value.value ? Json(*value.value) : Json(nullptr);
  if (!value.error.empty()) j["error"] = value.error;
}

void to_json(Json& j, const MonitorEvent& value) {
  j = Json{{"type", std::string(to_string(value.type))}, {"subject", value.subject}, {"timestamp", value.timestamp}};
}

void from_json(const Json& j, MonitorEvent& value) {
  value.type = parse_token<EventType>(j, "type", parse_event_type);
  value.subject = need_string(j, "subject");
  value.timestamp = value_or<std::uint64_t>(j, "timestamp", 0);
}

void to_json(Json& j, const Notification& value) {
  j = Json{{"seq", value.seq},
           {"indicator", value.indicator_id},
           {"subscriber", value.subscriber},
           {"value", value.value},
           {"alarm", Json{{"op", std::string(to_string(value.alarm.op))}, {"threshold", value.alarm.threshold}}},
           {"event", value.event}};
}

void from_json(const Json& j, Notification& value) {
  value.seq = value_or<std::uint64_t>(j, "seq", 0);
  value.indicator_id = need_string(j, "indicator");
  value.subscriber = need_string(j, "subscriber");
  value.value = need_number(j, "value");
  const auto& alarm = need(j, "alarm");
  value.alarm = Alarm{parse_token<CompareOp>(alarm, "op", parse_compare_op), need_number(alarm, "threshold")};
  value.event = need(j, "event").get<MonitorEvent>();
}

void to_json(Json& j, const RoleRequirement& value) {
  j = Json{{"path", value.path}, {"optimal", value.optimal}, {"weight", value.weight}, {"mandatory", value.mandatory}};
  if (value.reject) j["reject"] = *value.reject;
  if (value.aspect) j["aspect"] = std::string(to_string(*value.aspect));
  if (!value.source.empty()) j["source"] = value.source;
}

void from_json(const Json& j, RoleRequirement& value) {
  value.path = need_string(j, "path");
  const auto unit = value_or<std::string>(j, "unit", "");
  value.optimal = loose_value(need(j, "optimal"), unit);
  value.reject.reset();
  if (auto it = j.find("reject"); it != j.end() && !it->is_null()) value.reject = loose_value(*it, unit);
  value.weight = value_or<double>(j, "weight", 1.0);
  value.mandatory = value_or<bool>(j, "mandatory", true);
  value.aspect.reset();
  if (j.contains("aspect")) value.aspect = parse_token<Aspect>(j, "aspect", parse_aspect);
  value.source = value_or<std::string>(j, "source", "");
}

void to_json(Json& j, const Role& value) {
  j = Json{{"name", value.name}, {"target_kind", std::string(to_string(value.target_kind))},
           {"requirements", value.requirements}};
}

void from_json(const Json& j, Role& value) {
  value.name = need_string(j, "name");
  value.target_kind = parse_token<ElementKind>(j, "target_kind", parse_element_kind);
  value.requirements = value_or<std::vector<RoleRequirement>>(j, "requirements", {});
}

void to_json(Json& j, const ProcessStructure& value) {
  Json activities = Json::array();
  for (const auto& a : value.activities) activities.push_back(Json{{"id", a.id}, {"roles", a.roles}});
  Json precedence = Json::array();
  for (const auto& [from, to] : value.precedence) precedence.push_back(Json::array({from, to}));
  j = Json{{"activities", std::move(activities)}, {"precedence", std::move(precedence)},
           {"sub_processes", value.sub_processes}};
}

void from_json(const Json& j, ProcessStructure& value) {
  value = {};
  if (auto it = j.find("activities"); it != j.end()) {
    for (const auto& a : *it) {
      value.activities.push_back({need_string(a, "id"), value_or<std::vector<std::string>>(a, "roles", {})});
    }
  }
  if (auto it = j.find("precedence"); it != j.end()) {
    for (const auto& edge : *it) {
      if (!edge.is_array() || edge.size() != 2) malformed("precedence edges are [from, to] pairs", "precedence");
      value.precedence.emplace_back(edge[0].get<std::string>(), edge[1].get<std::string>());
    }
  }
  value.sub_processes = value_or<std::map<std::string, std::vector<std::string>>>(j, "sub_processes", {});
}

void to_json(Json& j, const PerformanceRequirement& value) {
  Json scope{{"aspect", std::string(to_string(value.aspect))}};
  if (value.sub_process) scope["sub_process"] = *value.sub_process;
  j = Json{{"id", value.id},
           {"metric", std::string(to_string(value.metric))},
           {"scope", std::move(scope)},
           {"optimal", value.optimal},
           {"reject", value.reject},
           {"unit", value.unit},
           {"weight", value.weight}};
  if (value.indicator) j["indicator"] = *value.indicator;
  if (!value.source.empty()) j["source"] = value.source;
}

void from_json(const Json& j, PerformanceRequirement& value) {
  value.id = need_string(j, "id");
  value.metric = parse_token<Metric>(j, "metric", parse_metric);
  value.aspect = Aspect::kProcess;
  value.sub_process.reset();
  if (auto it = j.find("scope"); it != j.end()) {
    if (it->contains("aspect")) value.aspect = parse_token<Aspect>(*it, "aspect", parse_aspect);
    value.sub_process = optional_string(*it, "sub_process");
  }
  value.indicator = optional_string(j, "indicator");
  value.optimal = need_number(j, "optimal");
  value.reject = need_number(j, "reject");
  value.unit = value_or<std::string>(j, "unit", "");
  value.weight = value_or<double>(j, "weight", 1.0);
  value.source = value_or<std::string>(j, "source", "");
}

void to_json(Json& j, const FitnessTerm& value) {
  j = Json{{"kind", std::string(to_string(value.kind))}, {"weight", value.weight}};
  if (value.kind == FitnessTermKind::kIndicator) {
    j["indicator"] = value.indicator;
    j["min"] = value.min;
    j["max"] = value.max;
  }
  if (value.role) j["role"] = *value.role;
}

void from_json(const Json& j, FitnessTerm& value) {
  value.kind = parse_token<FitnessTermKind>(j, "kind", parse_fitness_term_kind);
  value.weight = value_or<double>(j, "weight", 1.0);
  value.indicator = value_or<std::string>(j, "indicator", "");
  value.min = value_or<double>(j, "min", 0.0);
  value.max = value_or<double>(j, "max", 1.0);
  value.role = optional_string(j, "role");
}

void to_json(Json& j, const RankingChoice& value) {
  j = Json{{"kind", std::string(to_string(value.kind))}, {"weights", value.weights}, {"priority", value.priority}};
}

void from_json(const Json& j, RankingChoice& value) {
  value.kind = j.contains("kind") ? parse_token<RankingKind>(j, "kind", parse_ranking_kind) : RankingKind::kWeightedSum;
  value.weights = value_or<std::vector<double>>(j, "weights", {});
  value.priority = value_or<std::vector<std::string>>(j, "priority", {});
}

void to_json(Json& j, const Thresholds& value) {
  j = Json{{"phase2_cutoff", value.phase2_cutoff},
           {"phase3_threshold", value.phase3_threshold},
           {"phase2_max_candidates", value.phase2_max_candidates}};
}

void from_json(const Json& j, Thresholds& value) {
  value.phase2_cutoff = value_or<double>(j, "phase2_cutoff", 0.0);
  value.phase3_threshold = value_or<double>(j, "phase3_threshold", 0.0);
  const auto max_candidates = value_or<long long>(j, "phase2_max_candidates", 50);
  if (max_candidates < 0) malformed("phase2_max_candidates must not be negative", "phase2_max_candidates");
  value.phase2_max_candidates = static_cast<std::size_t>(max_candidates);
}

void to_json(Json& j, const VOSpecification& value) {
  j = Json{{"id", value.id},
           {"roles", value.roles},
           {"protocol", Json{{"process", value.protocol.process}, {"schema", value.protocol.schema}}},
           {"performance_requirements", value.performance_requirements},
           {"fitness", Json{{"terms", value.fitness.terms}}},
           {"performance_fitness", Json{{"components", value.performance_fitness.components}}},
           {"ranking", value.ranking},
           {"thresholds", value.thresholds},
           {"exclusivity", value.exclusivity}};
}

void from_json(const Json& j, VOSpecification& value) {
  if (!j.is_object()) malformed("specification must be a JSON object");
  value.id = value_or<std::string>(j, "id", "");
  value.roles = value_or<std::vector<Role>>(j, "roles", {});
  value.protocol = {};
  if (auto it = j.find("protocol"); it != j.end()) {
    if (it->contains("process")) value.protocol.process = (*it)["process"].get<ProcessStructure>();
    if (it->contains("schema")) value.protocol.schema = (*it)["schema"].get<SocialNetworkSchema>();
  }
  value.performance_requirements = value_or<std::vector<PerformanceRequirement>>(j, "performance_requirements", {});
  value.fitness.terms.clear();
  if (auto it = j.find("fitness"); it != j.end()) value.fitness.terms = value_or<std::vector<FitnessTerm>>(*it, "terms", {});
  value.performance_fitness.components.clear();
  if (auto it = j.find("performance_fitness"); it != j.end()) {
    value.performance_fitness.components = value_or<std::vector<std::string>>(*it, "components", {});
  }
  value.ranking = value_or<RankingChoice>(j, "ranking", {});
  value.thresholds = value_or<Thresholds>(j, "thresholds", {});
  value.exclusivity = value_or<bool>(j, "exclusivity", false);
}

void to_json(Json& j, const Violation& value) {
  j = Json{{"category", std::string(to_string(value.category))}, {"location", value.location},
           {"message", value.message}};
}

void to_json(Json& j, const GAConfig& value) {
  j = Json{{"population_size", value.population_size},
           {"generations", value.generations},
           {"tournament_size", value.tournament_size},
           {"elite_count", value.elite_count},
           {"crossover_probability", value.crossover_probability},
           {"mutation_probability", value.mutation_probability},
           {"seed", value.seed},
           {"top_k", value.top_k}};
}

void from_json(const Json& j, GAConfig& value) {
  const GAConfig defaults;
  value.population_size = value_or<std::size_t>(j, "population_size", defaults.population_size);
  value.generations = value_or<std::size_t>(j, "generations", defaults.generations);
  value.tournament_size = value_or<std::size_t>(j, "tournament_size", defaults.tournament_size);
  value.elite_count = value_or<std::size_t>(j, "elite_count", defaults.elite_count);
  value.crossover_probability = value_or<double>(j, "crossover_probability", defaults.crossover_probability);
  value.mutation_probability = value_or<double>(j, "mutation_probability", defaults.mutation_probability);
  value.seed = value_or<std::uint64_t>(j, "seed", defaults.seed);
  value.top_k = value_or<std::size_t>(j, "top_k", defaults.top_k);
}

void to_json(Json& j, const CandidateSet& value) {
  Json candidates = Json::array();
  for (const auto& c : value.candidates) candidates.push_back(Json{{"element", c.element_id}, {"conformance", c.conformance}});
  j = Json{{"role", value.role}, {"candidates", std::move(candidates)}};
}

void from_json(const Json& j, CandidateSet& value) {
  value.role = need_string(j, "role");
  value.candidates.clear();
  for (const auto& c : need(j, "candidates")) {
    value.candidates.push_back({need_string(c, "element"), need_number(c, "conformance")});
  }
}

void to_json(Json& j, const PerformanceVector& value) {
  Json values = Json::array();
  for (const auto& v : value.values) values.push_back(v ? Json(*v) : Json(nullptr));
  j = Json{{"values", std::move(values)}, {"issues", value.issues}};
}

void from_json(const Json& j, PerformanceVector& value) {
  value.values.clear();
  for (const auto& v : need(j, "values")) {
    value.values.push_back(v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
  }
  value.issues = value_or<std::vector<std::string>>(j, "issues", {});
}

void to_json(Json& j, const VOVariant& value) {
  j = Json{{"assignment", value.genome.assignment}, {"fitness", value.fitness}, {"social_breakdown", value.social_breakdown}};
  j["performance"] = value.performance ? Json(*value.performance) : Json(nullptr);
  j["rank"] = value.rank ? Json(*value.rank) : Json(nullptr);
  if (value.front) j["front"] = *value.front;
  j["stale"] = value.stale;
}

void from_json(const Json& j, VOVariant& value) {
  value.genome.assignment = need(j, "assignment").get<std::vector<std::string>>();
  value.fitness = need_number(j, "fitness");
  value.social_breakdown.clear();
  if (auto it = j.find("social_breakdown"); it != j.end()) {
    for (const auto& d : *it) value.social_breakdown.push_back({need_string(d, "requirement"), need_number(d, "degree")});
  }
  value.performance.reset();
  if (auto it = j.find("performance"); it != j.end() && !it->is_null()) value.performance = it->get<PerformanceVector>();
  value.rank.reset();
  if (auto it = j.find("rank"); it != j.end() && !it->is_null()) value.rank = it->get<std::size_t>();
  value.front.reset();
  if (auto it = j.find("front"); it != j.end() && !it->is_null()) value.front = it->get<std::size_t>();
  value.stale = value_or<bool>(j, "stale", false);
}

Json registry_to_json(const Registry& registry) {
  Json elements = Json::array();
  for (const auto& [id, element] : registry.elements()) elements.push_back(element);
  return Json{{"elements", std::move(elements)},
              {"competences", registry.all_competences()},
              {"services", registry.all_services()}};
}

Json graph_to_json(const SocialGraph& graph) {
  Json relations = Json::array();
  for (const auto& [id, relation] : graph.all()) relations.push_back(relation);
  return Json{{"relations", std::move(relations)}};
}

Json error_to_json(const Error& error) {
  return Json{{"code", std::string(to_string(error.code()))}, {"message", error.what()}, {"detail", error.detail()}};
}

Json parse_json_text(std::string_view text, std::string_view what) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kMalformed, "invalid JSON in " + std::string(what) + ": " + e.what(), std::string(what));
  }
}

void write_json_file(const std::filesystem::path& path, const Json& document) {
  std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string(), tmp.string());
    out << document.dump(2) << '\n';
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string(), tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot replace " + path.string() + ": " + ec.message(), path.string());
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string(), path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_json_text(buffer.str(), path.string());
}

}  // namespace mapss
