#include "mapss/attribute.hpp"

#include <algorithm>

namespace mapss {

std::string_view AttributeValue::type_name() const {
  switch (value_.index()) {
    case 0: return "number";
    case 1: return "text";
    case 2: return "bool";
    case 3: return "enum";
    default: return "list";
  }
}

void AttributeValue::flatten_into(std::vector<const AttributeValue*>& out) const {
  if (const auto* items = as_list()) {
    for (const auto& item : *items) item.flatten_into(out);
    return;
  }
  out.push_back(this);
}

std::optional<CompareOp> parse_compare_op(std::string_view token) {
  if (token == "eq" || token == "==" || token == "=") return CompareOp::kEq;
  if (token == "ne" || token == "!=") return CompareOp::kNe;
  if (token == "lt" || token == "<") return CompareOp::kLt;
  if (token == "le" || token == "<=") return CompareOp::kLe;
  if (token == "gt" || token == ">") return CompareOp::kGt;
  if (token == "ge" || token == ">=") return CompareOp::kGe;
  return std::nullopt;
}

std::string_view to_string(CompareOp op) {
  switch (op) {
    case CompareOp::kEq: return "==";
    case CompareOp::kNe: return "!=";
    case CompareOp::kLt: return "<";
    case CompareOp::kLe: return "<=";
    case CompareOp::kGt: return ">";
    case CompareOp::kGe: return ">=";
  }
  return "?";
}

bool is_ordering(CompareOp op) {
  return op != CompareOp::kEq && op != CompareOp::kNe;
}

bool compare(double lhs, CompareOp op, double rhs) {
  switch (op) {
    case CompareOp::kEq: return lhs == rhs;
    case CompareOp::kNe: return lhs != rhs;
    case CompareOp::kLt: return lhs < rhs;
    case CompareOp::kLe: return lhs <= rhs;
    case CompareOp::kGt: return lhs > rhs;
    case CompareOp::kGe: return lhs >= rhs;
  }
  return false;
}

namespace {

const std::string* token_of(const AttributeValue& v) {
  if (const auto* t = v.as_text()) return t;
  if (const auto* e = v.as_enum()) return &e->token;
  return nullptr;
}

}  // namespace

bool scalar_matches(const AttributeValue& observed, const AttributeValue& expected) {
  if (const auto* lhs = token_of(observed)) {
    const auto* rhs = token_of(expected);
    return rhs != nullptr && *lhs == *rhs;
  }
  return observed == expected;
}

double interpolate_degree(double observed, double optimal, double reject) {
  return std::clamp((observed - reject) / (optimal - reject), 0.0, 1.0);
}

}  // namespace mapss
