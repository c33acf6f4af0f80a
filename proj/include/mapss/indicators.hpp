#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mapss/attribute.hpp"
#include "mapss/registry.hpp"
#include "mapss/social_graph.hpp"

namespace mapss {

struct ElementSource {
  std::optional<ElementKind> kind;
  std::vector<Predicate> where;
};

struct RelationPredicate {
  std::string attribute;
  CompareOp op = CompareOp::kEq;
  AttributeValue value;
};

struct RelationSource {
  std::optional<std::string> type;
  std::optional<std::string> endpoint;
  std::vector<RelationPredicate> where;
};

enum class QueryScope {
  kAll,
  // Restricts to the elements of the variant being scored (relations: both
  // endpoints). Outside fitness evaluation there are no members.
  kMembers,
};

struct DataQuery {
  std::variant<ElementSource, RelationSource> source;
  // Attribute path (elements) or attribute name (relations) whose numeric
  // values feed sum/min/max/avg.
  std::optional<std::string> projection;
  QueryScope scope = QueryScope::kAll;
};

enum class ExprOp {
  kLiteral,
  kAdd,
  kSubtract,
  kMultiply,
  kDivide,
  kCompare,
  kCount,
  kSum,
  kMin,
  kMax,
  kAvg,
};

std::string_view to_string(ExprOp op);
std::optional<ExprOp> parse_expr_op(std::string_view token);
bool is_aggregate(ExprOp op);

struct IndicatorExpr {
  ExprOp op = ExprOp::kLiteral;
  double literal = 0.0;
  CompareOp comparison = CompareOp::kEq;
  std::vector<IndicatorExpr> args;
  std::optional<DataQuery> query;
};

// Throws Error(kMalformed) whose detail is a JSON pointer to the faulty node.
void type_check(const IndicatorExpr& expr, const std::string& at = "");

bool reads_elements(const IndicatorExpr& expr);
bool reads_relations(const IndicatorExpr& expr);

struct EvalContext {
  const Registry& registry;
  const SocialGraph& graph;
  const std::set<std::string>* members = nullptr;
};

struct IndicatorValue {
  std::optional<double> value;
  std::string error;

  bool available() const { return value.has_value(); }
  bool operator==(const IndicatorValue&) const = default;
};

IndicatorValue evaluate_expression(const IndicatorExpr& expr, const EvalContext& context);

struct Alarm {
  CompareOp op = CompareOp::kGe;
  double threshold = 0.0;
};

struct Indicator {
  std::string id;
  std::string name;
  IndicatorExpr expression;
  std::optional<Alarm> alarm;
  std::vector<std::string> subscribers;
};

enum class EventType { kElementRegistered, kElementUpdated, kRelationAdded, kIndicatorRecomputed };

std::string_view to_string(EventType type);
std::optional<EventType> parse_event_type(std::string_view token);

struct MonitorEvent {
  EventType type = EventType::kElementRegistered;
  std::string subject;
  // Logical clock assigned by the store; runs stay reproducible.
  std::uint64_t timestamp = 0;

  bool operator==(const MonitorEvent&) const = default;
};

struct Notification {
  std::uint64_t seq = 0;
  std::string indicator_id;
  std::string subscriber;
  double value = 0.0;
  Alarm alarm;
  MonitorEvent event;
};

struct IndicatorState {
  IndicatorValue last;
  bool alarm_active = false;
};

// Indicator definitions plus the observer side: recomputation on events and
// edge-triggered alarm notifications appended to a feed.
class IndicatorStore {
 public:
  // Type-checks, stores and evaluates once to establish the baseline. An alarm
  // already satisfied by the baseline is armed silently.
  const std::string& define(Indicator indicator, const EvalContext& context);

  const Indicator& get(std::string_view id) const;
  bool contains(std::string_view id) const { return entries_.contains(id); }

  // Full evaluation on the given state. Throws kNotFound for unknown ids.
  IndicatorValue evaluate(std::string_view id, const EvalContext& context) const;
  const IndicatorState& state(std::string_view id) const;

  // Recomputes every indicator whose data sources may observe the event and
  // returns the notifications of alarms that switched from false to true.
  std::vector<Notification> notify(const MonitorEvent& event, const EvalContext& context);

  // Notifications with seq >= cursor.
  std::span<const Notification> feed(std::uint64_t cursor = 0) const;
  const std::vector<MonitorEvent>& ignored_events() const { return ignored_; }

  std::vector<Indicator> definitions() const;
  const std::map<std::string, IndicatorState, std::less<>>& states() const { return states_; }

  // Restores persisted state; definitions must already be present.
  void restore(std::map<std::string, IndicatorState, std::less<>> states,
               std::vector<Notification> feed);

 private:
  std::map<std::string, Indicator, std::less<>> entries_;
  std::map<std::string, IndicatorState, std::less<>> states_;
  std::vector<Notification> feed_;
  std::vector<MonitorEvent> ignored_;
};

bool alarm_holds(const Alarm& alarm, const IndicatorValue& value);

}  // namespace mapss
