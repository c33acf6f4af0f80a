#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace mapss {

// A numeric value with a unit tag. An empty unit means "dimensionless".
struct Quantity {
  double value = 0.0;
  std::string unit;

  bool operator==(const Quantity&) const = default;
};

struct EnumToken {
  std::string token;

  bool operator==(const EnumToken&) const = default;
};

class AttributeValue;
using AttributeList = std::vector<AttributeValue>;

// Carrier for the technical, functional and business characteristics stored
// on elements, descriptions and relations.
class AttributeValue {
 public:
  using Storage = std::variant<Quantity, std::string, bool, EnumToken, AttributeList>;

  AttributeValue() : value_(Quantity{}) {}
  explicit AttributeValue(Storage value) : value_(std::move(value)) {}

  static AttributeValue number(double value, std::string unit = {}) {
    return AttributeValue(Quantity{value, std::move(unit)});
  }
  static AttributeValue text(std::string value) { return AttributeValue(Storage(std::move(value))); }
  static AttributeValue boolean(bool value) { return AttributeValue(Storage(value)); }
  static AttributeValue enumeration(std::string token) {
    return AttributeValue(EnumToken{std::move(token)});
  }
  static AttributeValue list(AttributeList items) { return AttributeValue(std::move(items)); }

  const Quantity* as_number() const { return std::get_if<Quantity>(&value_); }
  const std::string* as_text() const { return std::get_if<std::string>(&value_); }
  const bool* as_bool() const { return std::get_if<bool>(&value_); }
  const EnumToken* as_enum() const { return std::get_if<EnumToken>(&value_); }
  const AttributeList* as_list() const { return std::get_if<AttributeList>(&value_); }

  // "number", "text", "bool", "enum" or "list".
  std::string_view type_name() const;
  const Storage& storage() const { return value_; }

  // Appends this value, or the leaves of a (nested) list, to `out`.
  void flatten_into(std::vector<const AttributeValue*>& out) const;

  bool operator==(const AttributeValue& other) const { return value_ == other.value_; }

 private:
  Storage value_;
};

enum class CompareOp { kEq, kNe, kLt, kLe, kGt, kGe };

std::optional<CompareOp> parse_compare_op(std::string_view token);
std::string_view to_string(CompareOp op);
bool is_ordering(CompareOp op);
bool compare(double lhs, CompareOp op, double rhs);

// Equality used for text/bool/enum matching. Text and enum tokens compare
// equal when their strings match so documents may use either form.
bool scalar_matches(const AttributeValue& observed, const AttributeValue& expected);

// Linear satisfaction degree anchored at optimal (1) and reject (0). The sign
// of (optimal - reject) gives the direction. Requires optimal != reject.
double interpolate_degree(double observed, double optimal, double reject);

}  // namespace mapss
