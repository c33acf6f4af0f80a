#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "mapss/error.hpp"
#include "mapss/pipeline.hpp"
#include "mapss/store.hpp"

namespace mapss {

struct Request {
  std::string method;  // GET | POST | PUT
  std::string path;    // starting with /v1/
  std::map<std::string, std::string> params;
  std::string body;
};

struct Response {
  int status = 200;
  nlohmann::json body;
};

int http_status(ErrorCode code);

// The /v1 API over a data directory. The HTTP server and the CLI's local mode
// both dispatch through handle(), so they expose the same surface.
//
// Layout of the data directory:
//   store.json     registry, relations and indicator definitions
//   monitor.json   alarm states, notification feed, logical clock
//   specs/<id>.json  runs/<id>.json  snapshots/<id>.json
class Service {
 public:
  explicit Service(std::filesystem::path data_dir);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  Response handle(const Request& request);

  // Blocks until background phase executions have finished.
  void wait_idle();

  Store& store() { return store_; }

 private:
  struct RunSlot {
    std::mutex mutex;
    Run run;
    bool busy = false;
  };

  Response route(const Request& request);

  Response post_element(const nlohmann::json& body, bool update, const std::string& id);
  Response post_run(const nlohmann::json& body);
  Response advance_run(const std::string& id, const nlohmann::json& body);
  Response loop_back_run(const std::string& id, const nlohmann::json& body);
  Response incept_run(const std::string& id, const nlohmann::json& body);
  Response replay_run(const std::string& id);

  nlohmann::json mutation_response(const std::vector<MutationResult>& results);
  void deliver(const std::vector<MutationResult>& results);
  void persist_store();
  void persist_run(const Run& run);

  std::shared_ptr<RunSlot> slot(const std::string& id);
  std::shared_ptr<const Snapshot> snapshot(const std::string& id);
  VOSpecification load_spec(const std::string& id);
  std::shared_ptr<const Snapshot> take_snapshot();

  std::filesystem::path dir_;
  Store store_;
  std::mutex persist_mutex_;
  std::mutex runs_mutex_;
  std::map<std::string, std::shared_ptr<RunSlot>> runs_;
  std::mutex snapshots_mutex_;
  std::map<std::string, std::shared_ptr<const Snapshot>> snapshots_;
  std::mutex workers_mutex_;
  std::vector<std::thread> workers_;
};

}  // namespace mapss
