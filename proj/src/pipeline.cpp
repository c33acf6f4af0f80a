#include "mapss/pipeline.hpp"

#include <algorithm>
#include <array>
#include <set>

#include "mapss/json_io.hpp"
#include "mapss/performance.hpp"

namespace mapss {

namespace {

constexpr std::array<std::pair<RunState, std::string_view>, 6> kStateNames{{
    {RunState::kSpecified, "specified"},
    {RunState::kCandidatesSelected, "candidates_selected"},
    {RunState::kVariantsGenerated, "variants_generated"},
    {RunState::kPerformanceRanked, "performance_ranked"},
    {RunState::kIncepted, "incepted"},
    {RunState::kHalted, "halted"},
}};

int position(RunState state) { return static_cast<int>(state); }

// Where the run sits in the phase order; a halted run sits where its phase began.
RunState effective_state(const Run& run) {
  return run.state == RunState::kHalted ? run.halted_from.value_or(RunState::kSpecified) : run.state;
}

void log(Run& run, std::string type, RunState from, RunState to, Json detail = Json::object()) {
  run.events.push_back({run.events.size(), std::move(type), from, to, std::move(detail)});
}

void invalidate_from(Run& run, RunState target) {
  if (position(target) < position(RunState::kCandidatesSelected)) run.candidates.reset();
  if (position(target) < position(RunState::kVariantsGenerated)) run.variants.reset();
  if (position(target) < position(RunState::kPerformanceRanked)) run.ranked.reset();
}

void select_phase(Run& run, const Snapshot& snapshot) {
  run.candidates = select_candidates(run.spec(), snapshot.registry);
}

void generate_phase(Run& run, std::shared_ptr<const Snapshot> snapshot) {
  const auto fitness = fitness_of(run.spec(), snapshot);
  auto variants = run.oracle ? enumerate_all(run.spec(), *run.candidates, fitness, run.ga.top_k)
                             : run_ga(run.spec(), *run.candidates, run.ga, fitness);
  if (variants.empty()) {
    throw Error(ErrorCode::kEvaluation, "no variant reaches the phase-3 threshold",
                std::to_string(run.spec().thresholds.phase3_threshold));
  }
  run.variants = std::move(variants);
}

void rank_phase(Run& run, std::shared_ptr<const Snapshot> snapshot) {
  const auto performance = performance_fitness_of(run.spec(), snapshot);
  auto ranked = *run.variants;
  for (auto& variant : ranked) {
    variant.performance = performance.evaluate(to_assignment(variant.genome, *run.candidates));
  }
  if (performance.components().empty()) {
    // Nothing to rank on: keep the phase-3 order.
    for (std::size_t i = 0; i < ranked.size(); ++i) ranked[i].rank = i + 1;
  } else {
    rank_variants(ranked, performance.components(), run.spec().ranking);
  }
  run.ranked = std::move(ranked);
}

void add_quantity(std::map<std::string, Quantity>& into, const std::string& key, const Quantity& value) {
  auto [it, inserted] = into.emplace(key, value);
  if (inserted) return;
  if (it->second.unit != value.unit) {
    throw Error(ErrorCode::kUnitMismatch, "capability '" + key + "' uses units '" + it->second.unit + "' and '" +
                                              value.unit + "'", key);
  }
  it->second.value += value.value;
}

AttributeValue text_list(const std::vector<std::string>& ids) {
  AttributeList items;
  for (const auto& id : ids) items.push_back(AttributeValue::text(id));
  return AttributeValue::list(std::move(items));
}

}  // namespace

std::string_view to_string(RunState state) {
  for (const auto& [value, name] : kStateNames) {
    if (value == state) return name;
  }
  return "unknown";
}

std::optional<RunState> parse_run_state(std::string_view token) {
  for (const auto& [value, name] : kStateNames) {
    if (name == token) return value;
  }
  return std::nullopt;
}

Run start_run(VOSpecification spec, const Snapshot& snapshot, GAConfig ga, bool oracle) {
  require_valid(spec);
  ga.validate();
  Run run;
  run.id = content_id(Json{{"spec", spec}, {"snapshot", snapshot.id}, {"ga", ga}, {"oracle", oracle}}, "run-");
  run.snapshot_id = snapshot.id;
  run.ga = ga;
  run.oracle = oracle;
  run.spec_versions.push_back(std::move(spec));
  log(run, "created", RunState::kSpecified, RunState::kSpecified, Json{{"seed", ga.seed}});
  return run;
}

void advance(Run& run, std::shared_ptr<const Snapshot> snapshot) {
  if (snapshot->id != run.snapshot_id) {
    throw Error(ErrorCode::kInvalidArgument, "snapshot '" + snapshot->id + "' is not the run's snapshot",
                run.snapshot_id);
  }
  const RunState from = run.state;
  RunState to;
  switch (from) {
    case RunState::kSpecified: to = RunState::kCandidatesSelected; break;
    case RunState::kCandidatesSelected: to = RunState::kVariantsGenerated; break;
    case RunState::kVariantsGenerated: to = RunState::kPerformanceRanked; break;
    case RunState::kPerformanceRanked:
      throw Error(ErrorCode::kInvalidState, "run is performance_ranked; incept a variant or loop back", run.id);
    default:
      throw Error(ErrorCode::kInvalidState, "cannot advance a run in state " + std::string(to_string(from)), run.id);
  }
  try {
    if (to == RunState::kCandidatesSelected) select_phase(run, *snapshot);
    if (to == RunState::kVariantsGenerated) generate_phase(run, snapshot);
    if (to == RunState::kPerformanceRanked) rank_phase(run, snapshot);
  } catch (const Error& error) {
    invalidate_from(run, from);
    run.state = RunState::kHalted;
    run.halted_from = from;
    run.diagnostic = error.what();
    log(run, "halted", from, RunState::kHalted, error_to_json(error));
    return;
  }
  run.state = to;
  run.diagnostic.clear();
  log(run, "advanced", from, to);
}

void loop_back(Run& run, RunState target, std::optional<VOSpecification> amendment) {
  const RunState current = effective_state(run);
  if (target == RunState::kHalted || target == RunState::kIncepted) {
    throw Error(ErrorCode::kInvalidArgument, "cannot loop back to " + std::string(to_string(target)),
                std::string(to_string(target)));
  }
  const bool earlier = run.state == RunState::kHalted ? position(target) <= position(current)
                                                      : position(target) < position(current);
  if (!earlier) {
    throw Error(ErrorCode::kInvalidState,
                "loop-back target " + std::string(to_string(target)) + " is not earlier than " +
                    std::string(to_string(run.state)),
                std::string(to_string(target)));
  }
  if (amendment) require_valid(*amendment);

  Json detail{{"target", std::string(to_string(target))}, {"amended", amendment.has_value()}};
  if (amendment) {
    run.spec_versions.push_back(std::move(*amendment));
  }
  detail["spec_version"] = run.spec_versions.size() - 1;
  const RunState from = run.state;
  invalidate_from(run, target);
  run.state = target;
  run.halted_from.reset();
  run.diagnostic.clear();
  log(run, "loop_back", from, target, std::move(detail));
}

Inception incept_vo(Run& run, Store& store, const Snapshot& snapshot, std::optional<std::vector<std::string>> chosen,
                    bool override_stale) {
  if (run.incepted_id) throw Error(ErrorCode::kInvalidState, "run already incepted", *run.incepted_id);
  if (run.state != RunState::kPerformanceRanked || !run.ranked || run.ranked->empty()) {
    throw Error(ErrorCode::kInvalidState, "inception needs a performance_ranked run", run.id);
  }
  if (snapshot.id != run.snapshot_id) {
    throw Error(ErrorCode::kInvalidArgument, "snapshot '" + snapshot.id + "' is not the run's snapshot",
                run.snapshot_id);
  }
  const VOVariant* variant = &run.ranked->front();
  if (chosen) {
    auto it = std::find_if(run.ranked->begin(), run.ranked->end(),
                           [&](const VOVariant& v) { return v.genome.assignment == *chosen; });
    if (it == run.ranked->end()) throw Error(ErrorCode::kNotFound, "variant is not among the ranked variants");
    variant = &*it;
  }
  if (variant->stale && !override_stale) {
    throw Error(ErrorCode::kStaleVariant, "variant was flagged stale by monitoring; override to incept anyway",
                run.id);
  }

  const auto& spec = run.spec();
  std::vector<std::string> partners;
  std::vector<std::string> services;
  std::vector<std::string> members;
  for (std::size_t i = 0; i < spec.roles.size(); ++i) {
    const auto& id = variant->genome.assignment.at(i);
    auto& bucket = spec.roles[i].target_kind == ElementKind::kPartner ? partners : services;
    if (std::find(bucket.begin(), bucket.end(), id) == bucket.end()) bucket.push_back(id);
    if (std::find(members.begin(), members.end(), id) == members.end()) members.push_back(id);
  }
  if (services.empty()) throw Error(ErrorCode::kInvalidState, "a VO needs a non-empty set of services", run.id);

  const std::string vo_id = "VO-" + run.id;
  std::map<std::string, CompetenceRecord> merged;
  for (const auto& partner : partners) {
    for (const auto& record : snapshot.registry.competences_of(partner)) {
      auto [it, inserted] = merged.try_emplace(record.competence_name);
      auto& into = it->second;
      if (inserted) {
        into.owner_id = vo_id;
        into.competence_name = record.competence_name;
        into.cost = Quantity{0.0, record.cost.unit};
      }
      for (const auto& [key, quantity] : record.capabilities) add_quantity(into.capabilities, key, quantity);
      if (into.cost.unit != record.cost.unit) {
        throw Error(ErrorCode::kUnitMismatch, "competence '" + record.competence_name + "' has costs in different units",
                    record.competence_name);
      }
      into.cost.value += record.cost.value;
      into.conspicuity.insert(into.conspicuity.end(), record.conspicuity.begin(), record.conspicuity.end());
    }
  }
  if (merged.empty()) throw Error(ErrorCode::kInvalidState, "a VO needs a non-empty set of competences", run.id);

  Element vo;
  vo.id = vo_id;
  vo.kind = ElementKind::kPartner;
  vo.name = spec.id.empty() ? vo_id : spec.id;
  vo.attributes.emplace("members", text_list(members));
  vo.attributes.emplace("services", text_list(services));
  vo.attributes.emplace("run", AttributeValue::text(run.id));
  std::vector<Description> descriptions;
  for (auto& [name, record] : merged) descriptions.emplace_back(std::move(record));

  Inception inception{vo_id, {}};
  inception.mutations.push_back(store.register_element(std::move(vo), std::move(descriptions)));
  for (std::size_t i = 0; i < members.size(); ++i) {
    Relation relation;
    relation.id = vo_id + "-member-" + std::to_string(i);
    relation.type = "vo_membership";
    relation.source = vo_id;
    relation.target = members[i];
    inception.mutations.push_back(store.add_relation(std::move(relation)));
  }

  run.incepted_id = vo_id;
  run.state = RunState::kIncepted;
  log(run, "incepted", RunState::kPerformanceRanked, RunState::kIncepted,
      Json{{"vo", vo_id}, {"assignment", variant->genome.assignment}, {"override_stale", override_stale}});
  return inception;
}

std::vector<std::string> affected_elements(const Notification& notification, const Store& store) {
  const auto& event = notification.event;
  if (event.type == EventType::kRelationAdded) {
    for (const auto& relation : store.relations()) {
      if (relation.id == event.subject) return {relation.source, relation.target};
    }
    return {};
  }
  if (event.type == EventType::kElementRegistered || event.type == EventType::kElementUpdated) return {event.subject};
  return {};
}

std::size_t apply_alarm(Run& run, const Notification& notification, const std::vector<std::string>& affected) {
  auto mark = [&](std::optional<std::vector<VOVariant>>& variants) {
    std::size_t count = 0;
    if (!variants) return count;
    for (auto& variant : *variants) {
      const auto& genes = variant.genome.assignment;
      const bool hit = std::any_of(affected.begin(), affected.end(), [&](const std::string& id) {
        return std::find(genes.begin(), genes.end(), id) != genes.end();
      });
      if (hit && !variant.stale) {
        variant.stale = true;
        ++count;
      }
    }
    return count;
  };
  const std::size_t in_variants = mark(run.variants);
  const std::size_t in_ranked = mark(run.ranked);
  const std::size_t flagged = run.ranked ? in_ranked : in_variants;
  log(run, "alarm", run.state, run.state,
      Json{{"notification", notification}, {"affected", affected}, {"flagged", flagged}});
  return flagged;
}

Run replay(const Run& run, std::shared_ptr<const Snapshot> snapshot) {
  if (run.spec_versions.empty()) throw Error(ErrorCode::kInvalidArgument, "run has no specification");
  Run again = start_run(run.spec_versions.front(), *snapshot, run.ga, run.oracle);
  for (std::size_t i = 1; i < run.events.size(); ++i) {
    const auto& event = run.events[i];
    if (event.type == "advanced" || event.type == "halted") {
      advance(again, snapshot);
    } else if (event.type == "loop_back") {
      std::optional<VOSpecification> amendment;
      if (event.detail.value("amended", false)) {
        amendment = run.spec_versions.at(event.detail.at("spec_version").get<std::size_t>());
      }
      loop_back(again, event.to, std::move(amendment));
    } else if (event.type == "alarm") {
      apply_alarm(again, event.detail.at("notification").get<Notification>(),
                  event.detail.at("affected").get<std::vector<std::string>>());
    } else if (event.type == "incepted") {
      again.incepted_id = event.detail.at("vo").get<std::string>();
      again.state = RunState::kIncepted;
      log(again, event.type, event.from, event.to, event.detail);
    }
  }
  return again;
}

Json to_json_document(const Run& run) {
  Json events = Json::array();
  for (const auto& e : run.events) {
    events.push_back(Json{{"seq", e.seq},
                          {"type", e.type},
                          {"from", std::string(to_string(e.from))},
                          {"to", std::string(to_string(e.to))},
                          {"detail", e.detail}});
  }
  Json doc{{"run_id", run.id},
           {"state", std::string(to_string(run.state))},
           {"snapshot", run.snapshot_id},
           {"ga", run.ga},
           {"seed", run.ga.seed},
           {"oracle", run.oracle},
           {"spec_version", run.spec_versions.size() - 1},
           {"spec_versions", run.spec_versions},
           {"diagnostic", run.diagnostic},
           {"events", std::move(events)}};
  doc["halted_from"] = run.halted_from ? Json(std::string(to_string(*run.halted_from))) : Json(nullptr);
  doc["candidate_sets"] = run.candidates ? Json(*run.candidates) : Json(nullptr);
  doc["variants"] = run.variants ? Json(*run.variants) : Json(nullptr);
  doc["ranked"] = run.ranked ? Json(*run.ranked) : Json(nullptr);
  doc["incepted_id"] = run.incepted_id ? Json(*run.incepted_id) : Json(nullptr);
  return doc;
}

Run run_from_json(const Json& doc) {
  auto state = [](const Json& j) {
    const auto parsed = parse_run_state(j.get<std::string>());
    if (!parsed) throw Error(ErrorCode::kMalformed, "unknown run state '" + j.get<std::string>() + "'");
    return *parsed;
  };
  try {
    Run run;
    run.id = doc.at("run_id").get<std::string>();
    run.state = state(doc.at("state"));
    run.snapshot_id = doc.at("snapshot").get<std::string>();
    run.ga = doc.at("ga").get<GAConfig>();
    run.oracle = doc.at("oracle").get<bool>();
    run.spec_versions = doc.at("spec_versions").get<std::vector<VOSpecification>>();
    run.diagnostic = doc.value("diagnostic", "");
    if (!doc.at("halted_from").is_null()) run.halted_from = state(doc.at("halted_from"));
    if (!doc.at("candidate_sets").is_null()) run.candidates = doc.at("candidate_sets").get<CandidateSets>();
    if (!doc.at("variants").is_null()) run.variants = doc.at("variants").get<std::vector<VOVariant>>();
    if (!doc.at("ranked").is_null()) run.ranked = doc.at("ranked").get<std::vector<VOVariant>>();
    if (!doc.at("incepted_id").is_null()) run.incepted_id = doc.at("incepted_id").get<std::string>();
    for (const auto& e : doc.at("events")) {
      run.events.push_back({e.at("seq").get<std::uint64_t>(), e.at("type").get<std::string>(), state(e.at("from")),
                            state(e.at("to")), e.at("detail")});
    }
    return run;
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kMalformed, std::string("malformed run document: ") + e.what(), "run");
  }
}

Json variants_document(const Run& run) {
  Json roles = Json::array();
  for (const auto& role : run.spec().roles) roles.push_back(role.name);
  const bool ranked = run.ranked.has_value();
  Json variants = ranked ? Json(*run.ranked) : run.variants ? Json(*run.variants) : Json::array();
  return Json{{"run", run.id},
              {"state", std::string(to_string(run.state))},
              {"ranked", ranked},
              {"roles", std::move(roles)},
              {"variants", std::move(variants)}};
}

}  // namespace mapss
