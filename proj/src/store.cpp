#include "mapss/store.hpp"

#include <cstdio>
#include <mutex>

#include "mapss/json_io.hpp"

namespace mapss {

namespace {

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::vector<Description> descriptions_for(const Json& document, const std::string& id) {
  std::vector<Description> out;
  if (auto it = document.find("competences"); it != document.end()) {
    for (const auto& c : *it) {
      if (c.value("owner_id", "") == id) out.emplace_back(decode<CompetenceRecord>(c, "competence"));
    }
  }
  if (auto it = document.find("services"); it != document.end()) {
    for (const auto& s : *it) {
      if (s.value("service_id", "") == id) out.emplace_back(decode<ServiceDescription>(s, "service description"));
    }
  }
  return out;
}

std::vector<Description> current_descriptions(const Registry& registry, std::string_view id) {
  std::vector<Description> out;
  for (const auto& c : registry.competences_of(id)) out.emplace_back(c);
  if (const auto* s = registry.service_description(id)) out.emplace_back(*s);
  return out;
}

}  // namespace

const Indicator* Snapshot::indicator(std::string_view wanted) const {
  for (const auto& indicator : indicators) {
    if (indicator.id == wanted) return &indicator;
  }
  return nullptr;
}

Json store_document(const Registry& registry, const SocialGraph& graph, const std::vector<Indicator>& indicators) {
  Json doc = registry_to_json(registry);
  doc["relations"] = graph_to_json(graph)["relations"];
  doc["indicators"] = indicators;
  return doc;
}

std::string content_id(const Json& document, std::string_view prefix) {
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(fnv1a(document.dump())));
  return std::string(prefix) + buffer;
}

std::shared_ptr<const Snapshot> make_snapshot(Registry registry, SocialGraph graph, std::vector<Indicator> indicators) {
  auto snapshot = std::make_shared<Snapshot>();
  snapshot->id = content_id(store_document(registry, graph, indicators), "snap-");
  snapshot->registry = std::move(registry);
  snapshot->graph = std::move(graph);
  snapshot->indicators = std::move(indicators);
  return snapshot;
}

std::shared_ptr<const Snapshot> snapshot_from_json(const Json& document) {
  Store scratch;
  scratch.import_json(document);
  return scratch.snapshot();
}

MutationResult Store::emit(EventType type, const std::string& subject) {
  cached_snapshot_.reset();
  MonitorEvent event{type, subject, ++clock_};
  auto notifications = indicators_.notify(event, EvalContext{registry_, graph_, nullptr});
  return {std::move(event), std::move(notifications)};
}

MutationResult Store::register_element(Element element, std::vector<Description> descriptions) {
  std::unique_lock lock(mutex_);
  const auto id = registry_.register_element(std::move(element), std::move(descriptions));
  return emit(EventType::kElementRegistered, id);
}

MutationResult Store::update_element(Element element, std::vector<Description> descriptions) {
  std::unique_lock lock(mutex_);
  const auto id = element.id;
  registry_.update_element(std::move(element), std::move(descriptions));
  return emit(EventType::kElementUpdated, id);
}

MutationResult Store::add_relation(Relation relation) {
  std::unique_lock lock(mutex_);
  const auto id = graph_.add_relation(std::move(relation), registry_);
  return emit(EventType::kRelationAdded, id);
}

MutationResult Store::define_indicator(Indicator indicator) {
  std::unique_lock lock(mutex_);
  if (indicators_.contains(indicator.id)) {
    throw Error(ErrorCode::kDuplicateId, "indicator '" + indicator.id + "' already defined", indicator.id);
  }
  const auto id = indicators_.define(std::move(indicator), EvalContext{registry_, graph_, nullptr});
  return emit(EventType::kIndicatorRecomputed, id);
}

IndicatorValue Store::evaluate_indicator(std::string_view id) const {
  std::shared_lock lock(mutex_);
  return indicators_.evaluate(id, EvalContext{registry_, graph_, nullptr});
}

IndicatorState Store::indicator_state(std::string_view id) const {
  std::shared_lock lock(mutex_);
  return indicators_.state(id);
}

std::vector<Indicator> Store::indicators() const {
  std::shared_lock lock(mutex_);
  return indicators_.definitions();
}

std::vector<Notification> Store::feed(std::uint64_t cursor) const {
  std::shared_lock lock(mutex_);
  auto span = indicators_.feed(cursor);
  return {span.begin(), span.end()};
}

std::vector<Element> Store::search(const SearchQuery& query) const {
  std::shared_lock lock(mutex_);
  std::vector<Element> out;
  for (const auto* element : registry_.search(query)) out.push_back(*element);
  return out;
}

std::vector<Relation> Store::relations(const RelationFilter& filter) const {
  std::shared_lock lock(mutex_);
  std::vector<Relation> out;
  for (const auto* relation : graph_.relations(filter)) out.push_back(*relation);
  return out;
}

std::optional<Element> Store::element(std::string_view id) const {
  std::shared_lock lock(mutex_);
  if (const auto* e = registry_.find(id)) return *e;
  return std::nullopt;
}

Json Store::element_document(std::string_view id) const {
  std::shared_lock lock(mutex_);
  const auto& element = registry_.get(id);
  Json doc = element;
  doc["competences"] = Json::array();
  for (const auto& c : registry_.competences_of(id)) doc["competences"].push_back(c);
  if (const auto* s = registry_.service_description(id)) doc["service"] = *s;
  return doc;
}

std::shared_ptr<const Snapshot> Store::snapshot() const {
  {
    std::shared_lock lock(mutex_);
    if (cached_snapshot_) return cached_snapshot_;
  }
  std::unique_lock lock(mutex_);
  if (!cached_snapshot_) cached_snapshot_ = make_snapshot(registry_, graph_, indicators_.definitions());
  return cached_snapshot_;
}

Json Store::export_json() const {
  std::shared_lock lock(mutex_);
  return store_document(registry_, graph_, indicators_.definitions());
}

std::vector<MutationResult> Store::import_json(const Json& document) {
  if (!document.is_object()) throw Error(ErrorCode::kMalformed, "import document must be an object");
  std::vector<Element> partners;
  std::vector<Element> services;
  if (auto it = document.find("elements"); it != document.end()) {
    if (!it->is_array()) throw Error(ErrorCode::kMalformed, "'elements' must be an array", "elements");
    for (const auto& e : *it) {
      auto element = decode<Element>(e, "element");
      (element.kind == ElementKind::kPartner ? partners : services).push_back(std::move(element));
    }
  }
  std::vector<MutationResult> results;
  auto apply = [&](Element element) {
    auto descriptions = descriptions_for(document, element.id);
    std::optional<Element> existing = this->element(element.id);
    if (!existing) {
      results.push_back(register_element(std::move(element), std::move(descriptions)));
      return;
    }
    bool same = *existing == element;
    if (same) {
      std::shared_lock lock(mutex_);
      same = current_descriptions(registry_, element.id) == descriptions;
    }
    // Re-importing identical content is a no-op.
    if (!same) results.push_back(update_element(std::move(element), std::move(descriptions)));
  };
  for (auto& e : partners) apply(std::move(e));
  for (auto& e : services) apply(std::move(e));

  if (auto it = document.find("relations"); it != document.end()) {
    for (const auto& r : *it) {
      auto relation = decode<Relation>(r, "relation");
      {
        std::shared_lock lock(mutex_);
        if (const auto* existing = graph_.find(relation.id); existing && *existing == relation) continue;
      }
      results.push_back(add_relation(std::move(relation)));
    }
  }
  if (auto it = document.find("indicators"); it != document.end()) {
    for (const auto& i : *it) {
      auto indicator = decode<Indicator>(i, "indicator");
      {
        std::shared_lock lock(mutex_);
        if (indicators_.contains(indicator.id)) continue;
      }
      results.push_back(define_indicator(std::move(indicator)));
    }
  }
  return results;
}

Json Store::monitor_state() const {
  std::shared_lock lock(mutex_);
  Json states = Json::object();
  for (const auto& [id, state] : indicators_.states()) {
    states[id] = Json{{"last", state.last}, {"alarm_active", state.alarm_active}};
  }
  Json feed = Json::array();
  for (const auto& n : indicators_.feed(0)) feed.push_back(n);
  return Json{{"clock", clock_}, {"states", std::move(states)}, {"feed", std::move(feed)}};
}

void Store::restore_monitor_state(const Json& state) {
  std::unique_lock lock(mutex_);
  std::map<std::string, IndicatorState, std::less<>> states;
  for (const auto& [id, s] : state.at("states").items()) {
    IndicatorState restored;
    const auto& last = s.at("last");
    if (!last.at("value").is_null()) restored.last.value = last.at("value").get<double>();
    restored.last.error = last.value("error", "");
    restored.alarm_active = s.at("alarm_active").get<bool>();
    states.emplace(id, std::move(restored));
  }
  std::vector<Notification> feed;
  for (const auto& n : state.at("feed")) feed.push_back(n.get<Notification>());
  indicators_.restore(std::move(states), std::move(feed));
  clock_ = state.at("clock").get<std::uint64_t>();
}

std::uint64_t Store::clock() const {
  std::shared_lock lock(mutex_);
  return clock_;
}

}  // namespace mapss
