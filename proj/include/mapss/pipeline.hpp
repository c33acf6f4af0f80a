#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mapss/ga.hpp"
#include "mapss/selection.hpp"
#include "mapss/store.hpp"
#include "mapss/vo_spec.hpp"

namespace mapss {

enum class RunState { kSpecified, kCandidatesSelected, kVariantsGenerated, kPerformanceRanked, kIncepted, kHalted };

std::string_view to_string(RunState state);
std::optional<RunState> parse_run_state(std::string_view token);

// One entry of a run's event log. `detail` carries whatever replay needs.
struct RunEvent {
  std::uint64_t seq = 0;
  std::string type;  // created | advanced | halted | loop_back | alarm | incepted
  RunState from = RunState::kSpecified;
  RunState to = RunState::kSpecified;
  nlohmann::json detail = nlohmann::json::object();
};

struct Run {
  std::string id;
  std::vector<VOSpecification> spec_versions;
  std::string snapshot_id;
  GAConfig ga;
  bool oracle = false;
  RunState state = RunState::kSpecified;
  // State the failing phase started from, while halted.
  std::optional<RunState> halted_from;
  std::string diagnostic;

  std::optional<CandidateSets> candidates;
  std::optional<std::vector<VOVariant>> variants;
  std::optional<std::vector<VOVariant>> ranked;
  std::optional<std::string> incepted_id;

  std::vector<RunEvent> events;

  const VOSpecification& spec() const { return spec_versions.back(); }
};

// Validates the spec (kSpecInvalid) and the GA config. The run id is derived
// from spec, snapshot, GA config and mode.
Run start_run(VOSpecification spec, const Snapshot& snapshot, GAConfig ga, bool oracle = false);

// Executes the next phase (2, 3 or 4) against the run's snapshot. A failing
// phase moves the run to halted with a diagnostic; advancing from any other
// state than specified/candidates_selected/variants_generated throws
// kInvalidState and leaves the run untouched.
void advance(Run& run, std::shared_ptr<const Snapshot> snapshot);

// Moves back to an earlier state, optionally replacing the spec. Invalid
// amendments throw kSpecInvalid and leave the run untouched.
void loop_back(Run& run, RunState target, std::optional<VOSpecification> amendment = std::nullopt);

// Registers the chosen ranked variant (best ranked by default) as a new
// partner in the store and links it to its members with vo_membership
// relations.
struct Inception {
  std::string vo_id;
  std::vector<MutationResult> mutations;
};
Inception incept_vo(Run& run, Store& store, const Snapshot& snapshot,
                    std::optional<std::vector<std::string>> chosen = std::nullopt, bool override_stale = false);

// Element ids an alarm notification is about: the element itself, or both
// endpoints of a relation.
std::vector<std::string> affected_elements(const Notification& notification, const Store& store);

// Logs the alarm and flags variants containing any affected element as stale.
// Returns the number of variants newly flagged.
std::size_t apply_alarm(Run& run, const Notification& notification, const std::vector<std::string>& affected);

// Re-executes the event log from the first spec version against the snapshot.
// Inception is not repeated; its recorded outcome is copied.
Run replay(const Run& run, std::shared_ptr<const Snapshot> snapshot);

nlohmann::json to_json_document(const Run& run);
Run run_from_json(const nlohmann::json& document);
// {run, state, roles, variants}; ranked variants when available.
nlohmann::json variants_document(const Run& run);

}  // namespace mapss
