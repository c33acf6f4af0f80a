#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "mapss/error.hpp"
#include "mapss/ga.hpp"
#include "mapss/indicators.hpp"
#include "mapss/registry.hpp"
#include "mapss/selection.hpp"
#include "mapss/social_graph.hpp"
#include "mapss/vo_spec.hpp"

// JSON codecs for every document exchanged through files, the CLI and the
// HTTP API. Decoders throw Error(kMalformed) with the offending field.
namespace mapss {

using Json = nlohmann::json;

void to_json(Json& j, const Quantity& value);
void from_json(const Json& j, Quantity& value);
// Accepts {type, value, unit?} as well as bare JSON scalars and arrays.
void to_json(Json& j, const AttributeValue& value);
void from_json(const Json& j, AttributeValue& value);

void to_json(Json& j, const Element& value);
void from_json(const Json& j, Element& value);
void to_json(Json& j, const Evidence& value);
void from_json(const Json& j, Evidence& value);
void to_json(Json& j, const CompetenceRecord& value);
void from_json(const Json& j, CompetenceRecord& value);
void to_json(Json& j, const ServiceDescription& value);
void from_json(const Json& j, ServiceDescription& value);
void to_json(Json& j, const Predicate& value);
void from_json(const Json& j, Predicate& value);
void to_json(Json& j, const SearchQuery& value);
void from_json(const Json& j, SearchQuery& value);

void to_json(Json& j, const Relation& value);
void from_json(const Json& j, Relation& value);
void to_json(Json& j, const SocialRequirement& value);
void from_json(const Json& j, SocialRequirement& value);
void to_json(Json& j, const SocialNetworkSchema& value);
void from_json(const Json& j, SocialNetworkSchema& value);
void to_json(Json& j, const RequirementDegree& value);

void to_json(Json& j, const IndicatorExpr& value);
// Expression decoding reports the JSON pointer of the faulty node.
IndicatorExpr parse_expression(const Json& j, const std::string& at = "");
void to_json(Json& j, const DataQuery& value);
void to_json(Json& j, const Indicator& value);
void from_json(const Json& j, Indicator& value);
void to_json(Json& j, const IndicatorValue& value);
void to_json(Json& j, const MonitorEvent& value);
void from_json(const Json& j, MonitorEvent& value);
void to_json(Json& j, const Notification& value);
void from_json(const Json& j, Notification& value);

void to_json(Json& j, const RoleRequirement& value);
void from_json(const Json& j, RoleRequirement& value);
void to_json(Json& j, const Role& value);
void from_json(const Json& j, Role& value);
void to_json(Json& j, const ProcessStructure& value);
void from_json(const Json& j, ProcessStructure& value);
void to_json(Json& j, const PerformanceRequirement& value);
void from_json(const Json& j, PerformanceRequirement& value);
void to_json(Json& j, const FitnessTerm& value);
void from_json(const Json& j, FitnessTerm& value);
void to_json(Json& j, const RankingChoice& value);
void from_json(const Json& j, RankingChoice& value);
void to_json(Json& j, const Thresholds& value);
void from_json(const Json& j, Thresholds& value);
void to_json(Json& j, const VOSpecification& value);
void from_json(const Json& j, VOSpecification& value);
void to_json(Json& j, const Violation& value);

void to_json(Json& j, const GAConfig& value);
void from_json(const Json& j, GAConfig& value);
void to_json(Json& j, const CandidateSet& value);
void from_json(const Json& j, CandidateSet& value);
void to_json(Json& j, const PerformanceVector& value);
void from_json(const Json& j, PerformanceVector& value);
void to_json(Json& j, const VOVariant& value);
void from_json(const Json& j, VOVariant& value);

// {elements, competences, services}
Json registry_to_json(const Registry& registry);
// {relations}
Json graph_to_json(const SocialGraph& graph);

Json error_to_json(const Error& error);

// Wraps decoding so that any library exception becomes Error(kMalformed).
template <typename T>
T decode(const Json& j, std::string_view what) {
  try {
    return j.get<T>();
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kMalformed, "malformed " + std::string(what) + ": " + e.what(), std::string(what));
  }
}

Json parse_json_text(std::string_view text, std::string_view what);

// Throw Error(kIo) on filesystem failures. Writes go through a temporary file
// and a rename.
Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& document);

}  // namespace mapss
