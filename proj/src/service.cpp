#include "mapss/service.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "mapss/json_io.hpp"

namespace mapss {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::stringstream stream(path);
  std::string part;
  while (std::getline(stream, part, '/')) {
    if (!part.empty()) parts.push_back(part);
  }
  return parts;
}

std::size_t param_size(const Request& request, const std::string& key, std::size_t fallback) {
  auto it = request.params.find(key);
  if (it == request.params.end() || it->second.empty()) return fallback;
  try {
    std::size_t used = 0;
    const auto value = std::stoull(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(key);
    return static_cast<std::size_t>(value);
  } catch (const std::exception&) {
    throw Error(ErrorCode::kInvalidArgument, "query parameter '" + key + "' must be a non-negative integer", key);
  }
}

std::optional<std::string> param(const Request& request, const std::string& key) {
  auto it = request.params.find(key);
  if (it == request.params.end() || it->second.empty()) return std::nullopt;
  return it->second;
}

// Cursor pagination: the cursor is the offset of the first item.
Json page(const Json& items, const Request& request) {
  const std::size_t cursor = param_size(request, "cursor", 0);
  const std::size_t limit = std::min<std::size_t>(param_size(request, "limit", 100), 1000);
  Json out = Json::array();
  for (std::size_t i = cursor; i < items.size() && out.size() < limit; ++i) out.push_back(items[i]);
  const std::size_t next = cursor + out.size();
  return Json{{"items", std::move(out)}, {"next_cursor", next < items.size() ? Json(next) : Json(nullptr)}};
}

Json body_json(const Request& request) {
  if (request.body.empty()) return Json::object();
  return parse_json_text(request.body, "request body");
}

Response error_response(const Error& error) { return {http_status(error.code()), error_to_json(error)}; }

Response violations_response(const std::vector<Violation>& violations) {
  return {http_status(ErrorCode::kSpecInvalid),
          Json{{"code", "spec_invalid"},
               {"message", "specification violates " + std::to_string(violations.size()) + " rule(s)"},
               {"detail", violations}}};
}

bool safe_id(const std::string& id) {
  if (id.empty() || id.size() > 200 || id == "." || id == "..") return false;
  for (char c : id) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    if (!ok) return false;
  }
  return true;
}

void require_safe_id(const std::string& id, const char* what) {
  if (!safe_id(id)) {
    throw Error(ErrorCode::kInvalidArgument, std::string(what) + " id '" + id + "' may only use [A-Za-z0-9._-]", id);
  }
}

std::pair<Element, std::vector<Description>> element_from_body(const Json& body) {
  auto element = decode<Element>(body, "element");
  std::vector<Description> descriptions;
  if (auto it = body.find("competences"); it != body.end()) {
    if (!it->is_array()) throw Error(ErrorCode::kMalformed, "'competences' must be an array", "competences");
    for (auto c : *it) {
      if (c.is_object() && !c.contains("owner_id")) c["owner_id"] = element.id;
      descriptions.emplace_back(decode<CompetenceRecord>(c, "competence"));
    }
  }
  if (auto it = body.find("service"); it != body.end() && !it->is_null()) {
    auto s = *it;
    if (s.is_object() && !s.contains("service_id")) s["service_id"] = element.id;
    descriptions.emplace_back(decode<ServiceDescription>(s, "service description"));
  }
  return {std::move(element), std::move(descriptions)};
}

Json run_summary(const Run& run, bool busy) {
  Json doc = to_json_document(run);
  doc["busy"] = busy;
  return doc;
}

}  // namespace

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kDuplicateId:
    case ErrorCode::kInvalidState:
    case ErrorCode::kStaleVariant:
      return 409;
    case ErrorCode::kSpecInvalid:
    case ErrorCode::kUnsatisfiableRole:
    case ErrorCode::kEvaluation:
      return 422;
    case ErrorCode::kIo: return 500;
    default: return 400;
  }
}

Service::Service(fs::path data_dir) : dir_(std::move(data_dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create data directory " + dir_.string() + ": " + ec.message());
  if (fs::exists(dir_ / "store.json")) store_.import_json(read_json_file(dir_ / "store.json"));
  if (fs::exists(dir_ / "monitor.json")) store_.restore_monitor_state(read_json_file(dir_ / "monitor.json"));
  if (fs::exists(dir_ / "runs")) {
    for (const auto& entry : fs::directory_iterator(dir_ / "runs")) {
      if (entry.path().extension() != ".json") continue;
      auto run_slot = std::make_shared<RunSlot>();
      run_slot->run = run_from_json(read_json_file(entry.path()));
      runs_.emplace(run_slot->run.id, std::move(run_slot));
    }
  }
}

Service::~Service() { wait_idle(); }

void Service::wait_idle() {
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(workers_mutex_);
    workers.swap(workers_);
  }
  for (auto& worker : workers) worker.join();
}

void Service::persist_store() {
  std::lock_guard lock(persist_mutex_);
  write_json_file(dir_ / "store.json", store_.export_json());
  write_json_file(dir_ / "monitor.json", store_.monitor_state());
}

void Service::persist_run(const Run& run) { write_json_file(dir_ / "runs" / (run.id + ".json"), to_json_document(run)); }

std::shared_ptr<Service::RunSlot> Service::slot(const std::string& id) {
  std::lock_guard lock(runs_mutex_);
  auto it = runs_.find(id);
  if (it == runs_.end()) throw Error(ErrorCode::kNotFound, "unknown run '" + id + "'", id);
  return it->second;
}

std::shared_ptr<const Snapshot> Service::snapshot(const std::string& id) {
  std::lock_guard lock(snapshots_mutex_);
  if (auto it = snapshots_.find(id); it != snapshots_.end()) return it->second;
  const auto path = dir_ / "snapshots" / (id + ".json");
  if (!safe_id(id) || !fs::exists(path)) throw Error(ErrorCode::kNotFound, "unknown snapshot '" + id + "'", id);
  auto loaded = snapshot_from_json(read_json_file(path));
  if (loaded->id != id) throw Error(ErrorCode::kIo, "snapshot file content does not match its id", id);
  snapshots_.emplace(id, loaded);
  return loaded;
}

std::shared_ptr<const Snapshot> Service::take_snapshot() {
  auto current = store_.snapshot();
  std::lock_guard lock(snapshots_mutex_);
  snapshots_.emplace(current->id, current);
  const auto path = dir_ / "snapshots" / (current->id + ".json");
  if (!fs::exists(path)) {
    write_json_file(path, store_document(current->registry, current->graph, current->indicators));
  }
  return current;
}

VOSpecification Service::load_spec(const std::string& id) {
  const auto path = dir_ / "specs" / (id + ".json");
  if (!safe_id(id) || !fs::exists(path)) throw Error(ErrorCode::kNotFound, "unknown spec '" + id + "'", id);
  return decode<VOSpecification>(read_json_file(path), "specification");
}

Json Service::mutation_response(const std::vector<MutationResult>& results) {
  Json events = Json::array();
  Json notifications = Json::array();
  for (const auto& result : results) {
    events.push_back(result.event);
    for (const auto& n : result.notifications) notifications.push_back(n);
  }
  return Json{{"events", std::move(events)}, {"notifications", std::move(notifications)}};
}

void Service::deliver(const std::vector<MutationResult>& results) {
  for (const auto& result : results) {
    for (const auto& notification : result.notifications) {
      std::shared_ptr<RunSlot> target;
      {
        std::lock_guard lock(runs_mutex_);
        auto it = runs_.find(notification.subscriber);
        if (it == runs_.end()) continue;
        target = it->second;
      }
      const auto affected = affected_elements(notification, store_);
      std::lock_guard lock(target->mutex);
      apply_alarm(target->run, notification, affected);
      persist_run(target->run);
    }
  }
}

Response Service::handle(const Request& request) {
  try {
    return route(request);
  } catch (const Error& error) {
    return error_response(error);
  } catch (const nlohmann::json::exception& e) {
    return error_response(Error(ErrorCode::kMalformed, e.what()));
  } catch (const std::exception& e) {
    return error_response(Error(ErrorCode::kIo, e.what()));
  }
}

Response Service::post_element(const Json& body, bool update, const std::string& id) {
  auto [element, descriptions] = element_from_body(body);
  if (update && element.id != id) {
    throw Error(ErrorCode::kInvalidArgument, "element id in body differs from the path", element.id);
  }
  auto result = update ? store_.update_element(std::move(element), std::move(descriptions))
                       : store_.register_element(std::move(element), std::move(descriptions));
  persist_store();
  std::vector<MutationResult> results{std::move(result)};
  deliver(results);
  auto doc = mutation_response(results);
  doc["element"] = store_.element_document(results.front().event.subject);
  return {update ? 200 : 201, std::move(doc)};
}

Response Service::post_run(const Json& body) {
  VOSpecification spec;
  if (auto it = body.find("spec"); it != body.end()) {
    spec = decode<VOSpecification>(*it, "specification");
  } else if (auto id = body.find("spec_id"); id != body.end() && id->is_string()) {
    spec = load_spec(id->get<std::string>());
  } else {
    throw Error(ErrorCode::kMalformed, "run needs 'spec' or 'spec_id'", "spec");
  }
  if (auto it = body.find("threshold"); it != body.end() && !it->is_null()) {
    if (!it->is_number()) throw Error(ErrorCode::kMalformed, "'threshold' must be a number", "threshold");
    spec.thresholds.phase3_threshold = it->get<double>();
  }
  GAConfig ga = body.contains("ga") ? decode<GAConfig>(body["ga"], "GA configuration") : GAConfig{};
  if (auto it = body.find("seed"); it != body.end() && !it->is_null()) ga.seed = decode<std::uint64_t>(*it, "seed");
  const bool oracle = body.value("oracle", false);
  const auto violations = validate_spec(spec);
  if (!violations.empty()) return violations_response(violations);

  auto snap = body.contains("snapshot") ? snapshot(body["snapshot"].get<std::string>()) : take_snapshot();
  Run run = start_run(std::move(spec), *snap, ga, oracle);

  std::lock_guard lock(runs_mutex_);
  if (auto it = runs_.find(run.id); it != runs_.end()) {
    std::lock_guard run_lock(it->second->mutex);
    if (it->second->busy) throw Error(ErrorCode::kInvalidState, "run is executing a phase", run.id);
    if (it->second->run.incepted_id) {
      throw Error(ErrorCode::kInvalidState, "run '" + run.id + "' was already incepted", run.id);
    }
    it->second->run = run;
  } else {
    auto fresh = std::make_shared<RunSlot>();
    fresh->run = run;
    runs_.emplace(run.id, std::move(fresh));
  }
  persist_run(run);
  return {201, run_summary(run, false)};
}

Response Service::advance_run(const std::string& id, const Json& body) {
  auto target = slot(id);
  const bool async = body.value("async", false);
  const std::size_t phases = body.value("phases", 1);
  std::string snapshot_id;
  {
    std::lock_guard lock(target->mutex);
    snapshot_id = target->run.snapshot_id;
  }
  auto snap = snapshot(snapshot_id);
  Run work;
  {
    std::lock_guard lock(target->mutex);
    if (target->busy) throw Error(ErrorCode::kInvalidState, "run is executing a phase", id);
    work = target->run;
    target->busy = true;
  }
  auto execute = [this, target, snap, phases](Run run) {
    std::optional<Error> failure;
    try {
      for (std::size_t i = 0; i < phases; ++i) {
        advance(run, snap);
        if (run.state == RunState::kHalted || run.state == RunState::kPerformanceRanked) break;
      }
    } catch (const Error& error) {
      failure = error;
    } catch (const std::exception& e) {
      failure = Error(ErrorCode::kEvaluation, e.what());
    }
    std::lock_guard lock(target->mutex);
    target->busy = false;
    if (failure) return failure;
    target->run = std::move(run);
    persist_run(target->run);
    return failure;
  };
  if (async) {
    std::lock_guard lock(workers_mutex_);
    workers_.emplace_back([execute, work]() mutable { execute(std::move(work)); });
    return {202, Json{{"run_id", id}, {"busy", true}, {"state", std::string(to_string(work.state))}}};
  }
  if (auto failure = execute(std::move(work))) throw *failure;
  std::lock_guard lock(target->mutex);
  return {200, run_summary(target->run, false)};
}

Response Service::loop_back_run(const std::string& id, const Json& body) {
  auto target = slot(id);
  const auto token = body.value("target", "");
  const auto state = parse_run_state(token);
  if (!state) throw Error(ErrorCode::kInvalidArgument, "unknown loop-back target '" + token + "'", "target");
  std::optional<VOSpecification> amendment;
  if (auto it = body.find("spec"); it != body.end()) amendment = decode<VOSpecification>(*it, "specification");
  std::lock_guard lock(target->mutex);
  if (target->busy) throw Error(ErrorCode::kInvalidState, "run is executing a phase", id);
  if (auto it = body.find("threshold"); it != body.end() && !it->is_null()) {
    if (!amendment) amendment = target->run.spec();
    amendment->thresholds.phase3_threshold = decode<double>(*it, "threshold");
  }
  if (amendment) {
    const auto violations = validate_spec(*amendment);
    if (!violations.empty()) return violations_response(violations);
  }
  loop_back(target->run, *state, std::move(amendment));
  persist_run(target->run);
  return {200, run_summary(target->run, false)};
}

Response Service::incept_run(const std::string& id, const Json& body) {
  auto target = slot(id);
  std::optional<std::vector<std::string>> chosen;
  if (auto it = body.find("assignment"); it != body.end() && !it->is_null()) {
    chosen = decode<std::vector<std::string>>(*it, "assignment");
  }
  const bool override_stale = body.value("override_stale", false);
  Inception inception;
  {
    std::lock_guard lock(target->mutex);
    if (target->busy) throw Error(ErrorCode::kInvalidState, "run is executing a phase", id);
    auto snap = snapshot(target->run.snapshot_id);
    inception = incept_vo(target->run, store_, *snap, chosen, override_stale);
    persist_run(target->run);
  }
  persist_store();
  deliver(inception.mutations);
  auto doc = mutation_response(inception.mutations);
  doc["vo_id"] = inception.vo_id;
  doc["element"] = store_.element_document(inception.vo_id);
  std::lock_guard lock(target->mutex);
  doc["run"] = run_summary(target->run, false);
  return {201, std::move(doc)};
}

Response Service::replay_run(const std::string& id) {
  auto target = slot(id);
  Run original;
  {
    std::lock_guard lock(target->mutex);
    original = target->run;
  }
  const Run again = replay(original, snapshot(original.snapshot_id));
  const Json a = to_json_document(original);
  const Json b = to_json_document(again);
  return {200, Json{{"run_id", id}, {"identical", a == b}, {"state", std::string(to_string(again.state))}}};
}

Response Service::route(const Request& request) {
  const auto parts = split_path(request.path);
  if (parts.empty() || parts[0] != "v1") throw Error(ErrorCode::kNotFound, "no route for " + request.path, request.path);
  const std::size_t n = parts.size();
  const auto& m = request.method;
  auto is = [&](std::initializer_list<const char*> expected) {
    if (expected.size() != n - 1) return false;
    std::size_t i = 1;
    for (const char* e : expected) {
      if (std::string_view(e) != "*" && parts[i] != e) return false;
      ++i;
    }
    return true;
  };

  if (is({"elements"}) && m == "GET") {
    Json items = Json::array();
    SearchQuery query;
    if (auto kind = param(request, "kind")) {
      query.kind = parse_element_kind(*kind);
      if (!query.kind) throw Error(ErrorCode::kInvalidArgument, "unknown kind '" + *kind + "'", "kind");
    }
    for (const auto& e : store_.search(query)) items.push_back(e);
    return {200, page(items, request)};
  }
  if (is({"elements"}) && m == "POST") return post_element(body_json(request), false, {});
  if (is({"elements", "search"}) && m == "POST") {
    const auto query = decode<SearchQuery>(body_json(request), "search query");
    Json items = Json::array();
    for (const auto& e : store_.search(query)) items.push_back(e);
    return {200, page(items, request)};
  }
  if (is({"elements", "*"}) && m == "GET") return {200, store_.element_document(parts[2])};
  if (is({"elements", "*"}) && m == "PUT") return post_element(body_json(request), true, parts[2]);

  if (is({"relations"}) && m == "GET") {
    RelationFilter filter{param(request, "type"), param(request, "endpoint")};
    Json items = Json::array();
    for (const auto& r : store_.relations(filter)) items.push_back(r);
    return {200, page(items, request)};
  }
  if (is({"relations"}) && m == "POST") {
    std::vector<MutationResult> results{store_.add_relation(decode<Relation>(body_json(request), "relation"))};
    persist_store();
    deliver(results);
    return {201, mutation_response(results)};
  }

  if (is({"indicators"}) && m == "GET") {
    Json items = Json::array();
    for (const auto& i : store_.indicators()) items.push_back(i);
    return {200, page(items, request)};
  }
  if (is({"indicators"}) && m == "POST") {
    std::vector<MutationResult> results{store_.define_indicator(decode<Indicator>(body_json(request), "indicator"))};
    persist_store();
    deliver(results);
    auto doc = mutation_response(results);
    const auto& indicator_id = results.front().event.subject;
    const auto state = store_.indicator_state(indicator_id);
    doc["indicator"] = indicator_id;
    doc["value"] = state.last;
    doc["alarm_active"] = state.alarm_active;
    return {201, std::move(doc)};
  }
  if (is({"indicators", "*"}) && m == "GET") {
    const auto& indicator_id = parts[2];
    Json definition;
    for (const auto& i : store_.indicators()) {
      if (i.id == indicator_id) definition = i;
    }
    if (definition.is_null()) throw Error(ErrorCode::kNotFound, "unknown indicator '" + indicator_id + "'", indicator_id);
    const auto state = store_.indicator_state(indicator_id);
    return {200, Json{{"definition", definition},
                      {"value", store_.evaluate_indicator(indicator_id)},
                      {"alarm_active", state.alarm_active}}};
  }
  if (is({"notifications"}) && m == "GET") {
    const std::size_t cursor = param_size(request, "cursor", 0);
    const std::size_t limit = std::min<std::size_t>(param_size(request, "limit", 100), 1000);
    const auto subscriber = param(request, "subscriber");
    Json items = Json::array();
    std::uint64_t next = cursor;
    for (const auto& notification : store_.feed(cursor)) {
      if (items.size() >= limit) break;
      next = notification.seq + 1;
      if (subscriber && notification.subscriber != *subscriber) continue;
      items.push_back(notification);
    }
    return {200, Json{{"items", std::move(items)}, {"next_cursor", next}}};
  }

  if (is({"import"}) && m == "POST") {
    const auto results = store_.import_json(body_json(request));
    persist_store();
    deliver(results);
    auto doc = mutation_response(results);
    doc["imported"] = results.size();
    return {200, std::move(doc)};
  }
  if (is({"export"}) && m == "GET") return {200, store_.export_json()};
  if (is({"snapshots"}) && m == "POST") {
    const auto snap = take_snapshot();
    return {201, Json{{"id", snap->id}}};
  }
  if (is({"snapshots", "*"}) && m == "GET") {
    const auto snap = snapshot(parts[2]);
    auto doc = store_document(snap->registry, snap->graph, snap->indicators);
    doc["id"] = snap->id;
    return {200, std::move(doc)};
  }

  if (is({"specs", "validate"}) && m == "POST") {
    const auto spec = decode<VOSpecification>(body_json(request), "specification");
    const auto violations = validate_spec(spec);
    if (!violations.empty()) return violations_response(violations);
    return {200, Json{{"valid", true}, {"violations", Json::array()}}};
  }
  if (is({"specs"}) && m == "POST") {
    const auto body = body_json(request);
    auto spec = decode<VOSpecification>(body, "specification");
    const auto violations = validate_spec(spec);
    if (!violations.empty()) return violations_response(violations);
    if (spec.id.empty()) spec.id = content_id(Json(spec), "spec-");
    require_safe_id(spec.id, "spec");
    write_json_file(dir_ / "specs" / (spec.id + ".json"), Json(spec));
    return {201, Json{{"id", spec.id}, {"spec", spec}}};
  }
  if (is({"specs"}) && m == "GET") {
    Json ids = Json::array();
    if (fs::exists(dir_ / "specs")) {
      std::vector<std::string> names;
      for (const auto& entry : fs::directory_iterator(dir_ / "specs")) {
        if (entry.path().extension() == ".json") names.push_back(entry.path().stem().string());
      }
      std::sort(names.begin(), names.end());
      for (auto& name : names) ids.push_back(std::move(name));
    }
    return {200, page(ids, request)};
  }
  if (is({"specs", "*"}) && m == "GET") return {200, Json(load_spec(parts[2]))};

  if (is({"runs"}) && m == "POST") return post_run(body_json(request));
  if (is({"runs"}) && m == "GET") {
    Json items = Json::array();
    std::vector<std::shared_ptr<RunSlot>> slots;
    {
      std::lock_guard lock(runs_mutex_);
      for (const auto& [id, s] : runs_) slots.push_back(s);
    }
    for (const auto& s : slots) {
      std::lock_guard lock(s->mutex);
      items.push_back(Json{{"id", s->run.id}, {"state", std::string(to_string(s->run.state))}, {"busy", s->busy}});
    }
    return {200, page(items, request)};
  }
  if (n == 3 && parts[1] == "runs" && m == "GET") {
    auto s = slot(parts[2]);
    std::lock_guard lock(s->mutex);
    return {200, run_summary(s->run, s->busy)};
  }
  if (n == 4 && parts[1] == "runs") {
    const auto& id = parts[2];
    const auto& action = parts[3];
    if (m == "GET" && action == "variants") {
      auto s = slot(id);
      std::lock_guard lock(s->mutex);
      auto doc = variants_document(s->run);
      auto paged = page(doc["variants"], request);
      doc["variants"] = std::move(paged["items"]);
      doc["next_cursor"] = std::move(paged["next_cursor"]);
      return {200, std::move(doc)};
    }
    if (m == "GET" && action == "events") {
      auto s = slot(id);
      std::lock_guard lock(s->mutex);
      return {200, page(to_json_document(s->run)["events"], request)};
    }
    if (m == "POST" && action == "advance") return advance_run(id, body_json(request));
    if (m == "POST" && action == "loopback") return loop_back_run(id, body_json(request));
    if (m == "POST" && action == "incept") return incept_run(id, body_json(request));
    if (m == "POST" && action == "replay") return replay_run(id);
  }
  throw Error(ErrorCode::kNotFound, "no route for " + m + " " + request.path, request.path);
}

}  // namespace mapss
