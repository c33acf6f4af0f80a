#include "mapss/indicators.hpp"

#include <algorithm>
#include <limits>

#include "mapss/error.hpp"

namespace mapss {

std::string_view to_string(ExprOp op) {
  switch (op) {
    case ExprOp::kLiteral: return "lit";
    case ExprOp::kAdd: return "+";
    case ExprOp::kSubtract: return "-";
    case ExprOp::kMultiply: return "*";
    case ExprOp::kDivide: return "/";
    case ExprOp::kCompare: return "cmp";
    case ExprOp::kCount: return "count";
    case ExprOp::kSum: return "sum";
    case ExprOp::kMin: return "min";
    case ExprOp::kMax: return "max";
    case ExprOp::kAvg: return "avg";
  }
  return "?";
}

std::optional<ExprOp> parse_expr_op(std::string_view token) {
  static const std::map<std::string_view, ExprOp> kOps = {
      {"lit", ExprOp::kLiteral}, {"+", ExprOp::kAdd},       {"-", ExprOp::kSubtract},
      {"*", ExprOp::kMultiply},  {"/", ExprOp::kDivide},    {"count", ExprOp::kCount},
      {"sum", ExprOp::kSum},     {"min", ExprOp::kMin},     {"max", ExprOp::kMax},
      {"avg", ExprOp::kAvg},
  };
  if (auto it = kOps.find(token); it != kOps.end()) return it->second;
  if (parse_compare_op(token)) return ExprOp::kCompare;
  return std::nullopt;
}

bool is_aggregate(ExprOp op) {
  return op == ExprOp::kCount || op == ExprOp::kSum || op == ExprOp::kMin || op == ExprOp::kMax ||
         op == ExprOp::kAvg;
}

std::string_view to_string(EventType type) {
  switch (type) {
    case EventType::kElementRegistered: return "element_registered";
    case EventType::kElementUpdated: return "element_updated";
    case EventType::kRelationAdded: return "relation_added";
    case EventType::kIndicatorRecomputed: return "indicator_recomputed";
  }
  return "?";
}

std::optional<EventType> parse_event_type(std::string_view token) {
  if (token == "element_registered") return EventType::kElementRegistered;
  if (token == "element_updated") return EventType::kElementUpdated;
  if (token == "relation_added") return EventType::kRelationAdded;
  if (token == "indicator_recomputed") return EventType::kIndicatorRecomputed;
  return std::nullopt;
}

void type_check(const IndicatorExpr& expr, const std::string& at) {
  auto fail = [&](const std::string& message, const std::string& where) {
    throw Error(ErrorCode::kMalformed, message + " at '" + (where.empty() ? "/" : where) + "'",
                where.empty() ? "/" : where);
  };
  switch (expr.op) {
    case ExprOp::kLiteral:
      if (!expr.args.empty() || expr.query) fail("literal takes no operands", at);
      return;
    case ExprOp::kAdd:
    case ExprOp::kMultiply:
      if (expr.args.size() < 2) fail("operator needs at least two operands", at + "/args");
      break;
    case ExprOp::kSubtract:
    case ExprOp::kDivide:
    case ExprOp::kCompare:
      if (expr.args.size() != 2) fail("operator needs exactly two operands", at + "/args");
      break;
    default: {
      if (!expr.args.empty()) fail("aggregate takes a query, not operands", at + "/args");
      if (!expr.query) fail("aggregate needs a query", at + "/query");
      const auto& query = *expr.query;
      if (expr.op != ExprOp::kCount && !query.projection) {
        fail("aggregate needs a projection", at + "/query/project");
      }
      if (const auto* elements = std::get_if<ElementSource>(&query.source)) {
        try {
          for (const auto& predicate : elements->where) validate_predicate(predicate);
          if (query.projection) validate_path(*query.projection);
        } catch (const Error& error) {
          fail(error.what(), at + "/query");
        }
      } else {
        for (const auto& predicate : std::get<RelationSource>(query.source).where) {
          if (predicate.attribute.empty()) fail("relation predicate needs an attribute", at + "/query/where");
          if (is_ordering(predicate.op) && predicate.value.as_number() == nullptr) {
            fail("ordering comparison requires a numeric value", at + "/query/where");
          }
        }
      }
      return;
    }
  }
  for (std::size_t i = 0; i < expr.args.size(); ++i) {
    type_check(expr.args[i], at + "/args/" + std::to_string(i));
  }
}

namespace {

bool reads(const IndicatorExpr& expr, std::size_t source_index) {
  if (expr.query && expr.query->source.index() == source_index) return true;
  return std::any_of(expr.args.begin(), expr.args.end(),
                     [&](const IndicatorExpr& arg) { return reads(arg, source_index); });
}

struct EvalFailure {
  std::string message;
};

bool relation_matches(const Relation& relation, const RelationPredicate& predicate) {
  auto it = relation.attributes.find(predicate.attribute);
  if (it == relation.attributes.end()) return false;
  std::vector<const AttributeValue*> leaves;
  it->second.flatten_into(leaves);
  const auto* expected = predicate.value.as_number();
  for (const auto* leaf : leaves) {
    if (expected != nullptr) {
      const auto* observed = leaf->as_number();
      if (observed == nullptr) continue;
      if (observed->unit != expected->unit) {
        throw EvalFailure{"unit mismatch on relation attribute '" + predicate.attribute + "'"};
      }
      if (compare(observed->value, predicate.op, expected->value)) return true;
    } else {
      const bool same = scalar_matches(*leaf, predicate.value);
      if (predicate.op == CompareOp::kEq ? same : !same) return true;
    }
  }
  return false;
}

struct QueryResult {
  std::size_t count = 0;
  std::vector<double> values;
};

void collect_numbers(const AttributeValue& value, std::vector<double>& out,
                     std::optional<std::string>& unit) {
  std::vector<const AttributeValue*> leaves;
  value.flatten_into(leaves);
  for (const auto* leaf : leaves) {
    const auto* number = leaf->as_number();
    if (number == nullptr) continue;
    if (unit && *unit != number->unit) throw EvalFailure{"projection mixes units"};
    unit = number->unit;
    out.push_back(number->value);
  }
}

bool in_members(const EvalContext& context, const std::string& id) {
  return context.members != nullptr && context.members->contains(id);
}

QueryResult run_query(const DataQuery& query, const EvalContext& context) {
  QueryResult result;
  std::optional<std::string> unit;
  const bool members_only = query.scope == QueryScope::kMembers;
  if (const auto* source = std::get_if<ElementSource>(&query.source)) {
    std::vector<const Element*> elements;
    try {
      elements = context.registry.search({source->kind, source->where});
    } catch (const Error& error) {
      throw EvalFailure{error.what()};
    }
    for (const auto* element : elements) {
      if (members_only && !in_members(context, element->id)) continue;
      ++result.count;
      if (query.projection) {
        for (const auto& value : context.registry.resolve(*element, *query.projection)) {
          collect_numbers(value, result.values, unit);
        }
      }
    }
    return result;
  }
  const auto& source = std::get<RelationSource>(query.source);
  for (const auto* relation : context.graph.relations({source.type, source.endpoint})) {
    if (members_only && !(in_members(context, relation->source) && in_members(context, relation->target))) {
      continue;
    }
    const bool ok = std::all_of(source.where.begin(), source.where.end(),
                                [&](const RelationPredicate& p) { return relation_matches(*relation, p); });
    if (!ok) continue;
    ++result.count;
    if (query.projection) {
      if (auto it = relation->attributes.find(*query.projection); it != relation->attributes.end()) {
        collect_numbers(it->second, result.values, unit);
      }
    }
  }
  return result;
}

double eval(const IndicatorExpr& expr, const EvalContext& context) {
  switch (expr.op) {
    case ExprOp::kLiteral:
      return expr.literal;
    case ExprOp::kAdd: {
      double total = 0.0;
      for (const auto& arg : expr.args) total += eval(arg, context);
      return total;
    }
    case ExprOp::kMultiply: {
      double total = 1.0;
      for (const auto& arg : expr.args) total *= eval(arg, context);
      return total;
    }
    case ExprOp::kSubtract:
      return eval(expr.args.at(0), context) - eval(expr.args.at(1), context);
    case ExprOp::kDivide: {
      const double numerator = eval(expr.args.at(0), context);
      const double divisor = eval(expr.args.at(1), context);
      if (divisor == 0.0) throw EvalFailure{"division by zero"};
      return numerator / divisor;
    }
    case ExprOp::kCompare:
      return compare(eval(expr.args.at(0), context), expr.comparison, eval(expr.args.at(1), context))
                 ? 1.0
                 : 0.0;
    default:
      break;
  }
  const auto result = run_query(*expr.query, context);
  const auto& values = result.values;
  switch (expr.op) {
    case ExprOp::kCount:
      return static_cast<double>(result.count);
    case ExprOp::kSum: {
      double total = 0.0;
      for (double v : values) total += v;
      return total;
    }
    case ExprOp::kMin:
    case ExprOp::kMax:
    case ExprOp::kAvg:
      if (values.empty()) throw EvalFailure{std::string(to_string(expr.op)) + " over an empty set"};
      if (expr.op == ExprOp::kMin) return *std::min_element(values.begin(), values.end());
      if (expr.op == ExprOp::kMax) return *std::max_element(values.begin(), values.end());
      {
        double total = 0.0;
        for (double v : values) total += v;
        return total / static_cast<double>(values.size());
      }
    default:
      throw EvalFailure{"unsupported operator"};
  }
}

}  // namespace

bool reads_elements(const IndicatorExpr& expr) { return reads(expr, 0); }
bool reads_relations(const IndicatorExpr& expr) { return reads(expr, 1); }

IndicatorValue evaluate_expression(const IndicatorExpr& expr, const EvalContext& context) {
  try {
    return {eval(expr, context), {}};
  } catch (const EvalFailure& failure) {
    return {std::nullopt, failure.message};
  }
}

bool alarm_holds(const Alarm& alarm, const IndicatorValue& value) {
  return value.value && compare(*value.value, alarm.op, alarm.threshold);
}

const std::string& IndicatorStore::define(Indicator indicator, const EvalContext& context) {
  if (indicator.id.empty()) throw Error(ErrorCode::kMalformed, "indicator id must not be empty");
  if (entries_.contains(indicator.id)) {
    throw Error(ErrorCode::kDuplicateId, "indicator '" + indicator.id + "' already defined", indicator.id);
  }
  type_check(indicator.expression);
  if (indicator.alarm && (indicator.alarm->op == CompareOp::kEq || indicator.alarm->op == CompareOp::kNe)) {
    throw Error(ErrorCode::kMalformed, "alarm comparison must be one of <, <=, >, >=", indicator.id);
  }
  std::sort(indicator.subscribers.begin(), indicator.subscribers.end());
  indicator.subscribers.erase(std::unique(indicator.subscribers.begin(), indicator.subscribers.end()),
                              indicator.subscribers.end());
  IndicatorState state;
  state.last = evaluate_expression(indicator.expression, context);
  state.alarm_active = indicator.alarm && alarm_holds(*indicator.alarm, state.last);
  states_[indicator.id] = std::move(state);
  auto [it, inserted] = entries_.emplace(indicator.id, std::move(indicator));
  return it->first;
}

const Indicator& IndicatorStore::get(std::string_view id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) {
    throw Error(ErrorCode::kNotFound, "unknown indicator '" + std::string(id) + "'", std::string(id));
  }
  return it->second;
}

IndicatorValue IndicatorStore::evaluate(std::string_view id, const EvalContext& context) const {
  return evaluate_expression(get(id).expression, context);
}

const IndicatorState& IndicatorStore::state(std::string_view id) const {
  get(id);
  return states_.find(id)->second;
}

std::vector<Notification> IndicatorStore::notify(const MonitorEvent& event, const EvalContext& context) {
  std::vector<Notification> produced;
  const bool element_event =
      event.type == EventType::kElementRegistered || event.type == EventType::kElementUpdated;
  const bool relation_event = event.type == EventType::kRelationAdded;
  const bool known = element_event    ? context.registry.contains(event.subject)
                     : relation_event ? context.graph.find(event.subject) != nullptr
                                      : entries_.contains(event.subject);
  if (!known) {
    ignored_.push_back(event);
    return produced;
  }
  for (const auto& [id, indicator] : entries_) {
    const bool in_scope = (element_event && reads_elements(indicator.expression)) ||
                          (relation_event && reads_relations(indicator.expression));
    if (!in_scope) continue;
    auto& state = states_[id];
    state.last = evaluate_expression(indicator.expression, context);
    if (!indicator.alarm) continue;
    const bool holds = alarm_holds(*indicator.alarm, state.last);
    if (holds && !state.alarm_active) {
      for (const auto& subscriber : indicator.subscribers) {
        Notification notification;
        notification.seq = feed_.size();
        notification.indicator_id = id;
        notification.subscriber = subscriber;
        notification.value = *state.last.value;
        notification.alarm = *indicator.alarm;
        notification.event = event;
        feed_.push_back(notification);
        produced.push_back(std::move(notification));
      }
    }
    state.alarm_active = holds;
  }
  return produced;
}

std::span<const Notification> IndicatorStore::feed(std::uint64_t cursor) const {
  if (cursor >= feed_.size()) return {};
  return std::span<const Notification>(feed_).subspan(cursor);
}

std::vector<Indicator> IndicatorStore::definitions() const {
  std::vector<Indicator> out;
  for (const auto& [id, indicator] : entries_) out.push_back(indicator);
  return out;
}

void IndicatorStore::restore(std::map<std::string, IndicatorState, std::less<>> states,
                             std::vector<Notification> feed) {
  for (auto& [id, state] : states) {
    if (entries_.contains(id)) states_[id] = std::move(state);
  }
  feed_ = std::move(feed);
  for (std::size_t i = 0; i < feed_.size(); ++i) feed_[i].seq = i;
}

}  // namespace mapss
