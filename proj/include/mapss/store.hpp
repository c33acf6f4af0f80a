#pragma once

#include <cstdint>
#include <memory>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mapss/indicators.hpp"
#include "mapss/registry.hpp"
#include "mapss/social_graph.hpp"

namespace mapss {

// Immutable capture of registry, social graph and indicator definitions. The
// id is derived from the content, so equal content yields equal ids.
struct Snapshot {
  std::string id;
  Registry registry;
  SocialGraph graph;
  std::vector<Indicator> indicators;

  const Indicator* indicator(std::string_view id) const;
  EvalContext context(const std::set<std::string>* members = nullptr) const {
    return EvalContext{registry, graph, members};
  }
};

// Canonical store document: {elements, competences, services, relations, indicators}.
nlohmann::json store_document(const Registry& registry, const SocialGraph& graph,
                              const std::vector<Indicator>& indicators);
std::string content_id(const nlohmann::json& document, std::string_view prefix);

std::shared_ptr<const Snapshot> make_snapshot(Registry registry, SocialGraph graph,
                                              std::vector<Indicator> indicators);
std::shared_ptr<const Snapshot> snapshot_from_json(const nlohmann::json& document);

struct MutationResult {
  MonitorEvent event;
  std::vector<Notification> notifications;
};

// Live registry, social graph and indicator store. Many concurrent readers,
// serialized writers; every mutation emits exactly one monitor event which is
// delivered to the indicator observers before the write lock is released.
class Store {
 public:
  MutationResult register_element(Element element, std::vector<Description> descriptions = {});
  MutationResult update_element(Element element, std::vector<Description> descriptions = {});
  MutationResult add_relation(Relation relation);
  MutationResult define_indicator(Indicator indicator);

  IndicatorValue evaluate_indicator(std::string_view id) const;
  IndicatorState indicator_state(std::string_view id) const;
  std::vector<Indicator> indicators() const;
  std::vector<Notification> feed(std::uint64_t cursor = 0) const;

  std::vector<Element> search(const SearchQuery& query) const;
  std::vector<Relation> relations(const RelationFilter& filter = {}) const;
  std::optional<Element> element(std::string_view id) const;
  nlohmann::json element_document(std::string_view id) const;

  // Returns the cached snapshot while no mutation has happened since.
  std::shared_ptr<const Snapshot> snapshot() const;

  nlohmann::json export_json() const;
  // Imports every entity of the document (partners before services), one
  // event per entity.
  std::vector<MutationResult> import_json(const nlohmann::json& document);

  // Monitoring state (alarm flags, feed, logical clock) for persistence.
  nlohmann::json monitor_state() const;
  void restore_monitor_state(const nlohmann::json& state);

  std::uint64_t clock() const;

 private:
  MutationResult emit(EventType type, const std::string& subject);

  mutable std::shared_mutex mutex_;
  Registry registry_;
  SocialGraph graph_;
  IndicatorStore indicators_;
  std::uint64_t clock_ = 0;
  mutable std::shared_ptr<const Snapshot> cached_snapshot_;
};

}  // namespace mapss
