#include "mapss/cli.hpp"

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <pthread.h>

#include "mapss/http.hpp"
#include "mapss/json_io.hpp"
#include "mapss/service.hpp"

namespace mapss {

namespace {

struct Globals {
  std::string data_dir;
  std::string url;
  bool json = false;
};

std::string read_input(const std::string& path, std::istream& in) {
  std::stringstream buffer;
  if (path == "-") {
    buffer << in.rdbuf();
    return buffer.str();
  }
  std::ifstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorCode::kIo, "cannot read " + path, path);
  buffer << file.rdbuf();
  return buffer.str();
}

Json read_document(const std::string& path, std::istream& in) {
  return parse_json_text(read_input(path, in), path == "-" ? "stdin" : path);
}

// "path op value [unit]"
Json parse_where(const std::string& text) {
  std::istringstream stream(text);
  std::string path, op, value, unit;
  stream >> path >> op >> value >> unit;
  if (path.empty() || op.empty() || value.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "--where expects 'path op value [unit]'", text);
  }
  Json predicate{{"path", path}, {"op", op}};
  char* end = nullptr;
  const double number = std::strtod(value.c_str(), &end);
  if (end && *end == '\0') {
    predicate["value"] = number;
    if (!unit.empty()) predicate["unit"] = unit;
  } else if (value == "true" || value == "false") {
    predicate["value"] = value == "true";
  } else {
    predicate["value"] = value;
  }
  return predicate;
}

// name=value[:unit]
std::pair<std::string, Json> parse_attr(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw Error(ErrorCode::kInvalidArgument, "--attr expects name=value[:unit]", text);
  const auto name = text.substr(0, eq);
  auto value = text.substr(eq + 1);
  std::string unit;
  if (const auto colon = value.find(':'); colon != std::string::npos) {
    unit = value.substr(colon + 1);
    value = value.substr(0, colon);
  }
  char* end = nullptr;
  const double number = std::strtod(value.c_str(), &end);
  if (!value.empty() && end && *end == '\0') {
    Json attribute{{"type", "number"}, {"value", number}};
    if (!unit.empty()) attribute["unit"] = unit;
    return {name, attribute};
  }
  return {name, Json{{"type", "text"}, {"value", value}}};
}

std::string fmt(double value) {
  std::ostringstream out;
  out << std::setprecision(6) << value;
  return out.str();
}

void print_run(const Json& run, std::ostream& out) {
  out << "run " << run.value("run_id", "") << ": " << run.value("state", "");
  if (run.value("busy", false)) out << " (busy)";
  out << '\n';
  if (const auto d = run.value("diagnostic", ""); !d.empty()) out << "  diagnostic: " << d << '\n';
  const Json* list = nullptr;
  if (run.contains("ranked") && run["ranked"].is_array()) {
    list = &run["ranked"];
  } else if (run.contains("variants") && run["variants"].is_array()) {
    list = &run["variants"];
  }
  if (list && !list->empty()) {
    double best = (*list)[0].value("fitness", 0.0);
    for (const auto& v : *list) best = std::max(best, v.value("fitness", 0.0));
    out << "  variants: " << list->size() << ", best fitness " << fmt(best) << '\n';
    out << "  top: ";
    for (const auto& e : (*list)[0]["assignment"]) out << e.get<std::string>() << ' ';
    out << '\n';
  }
  if (run.contains("incepted_id") && run["incepted_id"].is_string()) {
    out << "  incepted: " << run["incepted_id"].get<std::string>() << '\n';
  }
}

void print_variants(const Json& doc, std::ostream& out) {
  const auto& roles = doc["roles"];
  out << "run " << doc.value("run", "") << " (" << doc.value("state", "") << ")\n";
  for (const auto& v : doc["variants"]) {
    out << (v["rank"].is_null() ? std::string("-") : std::to_string(v["rank"].get<std::size_t>())) << "  fitness "
        << fmt(v["fitness"].get<double>());
    if (v.contains("performance") && v["performance"].is_object()) {
      out << "  performance [";
      bool first = true;
      for (const auto& value : v["performance"]["values"]) {
        out << (first ? "" : ", ") << (value.is_null() ? std::string("n/a") : fmt(value.get<double>()));
        first = false;
      }
      out << ']';
    }
    if (v.value("stale", false)) out << "  STALE";
    out << "\n   ";
    for (std::size_t i = 0; i < roles.size(); ++i) {
      out << ' ' << roles[i].get<std::string>() << '=' << v["assignment"][i].get<std::string>();
    }
    out << '\n';
  }
}

void print_items(const Json& doc, std::ostream& out) {
  for (const auto& item : doc["items"]) {
    if (item.is_object() && item.contains("id")) {
      out << item["id"].get<std::string>();
      if (item.contains("kind")) out << "  " << item["kind"].get<std::string>();
      if (item.contains("type") && item["type"].is_string()) out << "  " << item["type"].get<std::string>();
      if (item.contains("source")) {
        out << "  " << item["source"].get<std::string>() << " -> " << item["target"].get<std::string>();
      }
      if (item.contains("state")) out << "  " << item["state"].get<std::string>();
      out << '\n';
    } else if (item.is_object() && item.contains("indicator")) {
      out << '#' << item["seq"] << ' ' << item["indicator"].get<std::string>() << " -> "
          << item["subscriber"].get<std::string>() << " value " << fmt(item["value"].get<double>()) << " on "
          << item["event"]["type"].get<std::string>() << ' ' << item["event"]["subject"].get<std::string>() << '\n';
    } else {
      out << (item.is_string() ? item.get<std::string>() : item.dump()) << '\n';
    }
  }
}

void print_error(const Json& body, std::ostream& err) {
  err << "error: " << body.value("code", "error") << ": " << body.value("message", "") << '\n';
  if (!body.contains("detail")) return;
  const auto& detail = body["detail"];
  if (detail.is_array()) {
    for (const auto& v : detail) {
      err << "  " << v.value("category", "") << " at " << v.value("location", "") << ": " << v.value("message", "")
          << '\n';
    }
  } else if (detail.is_string() && !detail.get<std::string>().empty()) {
    err << "  detail: " << detail.get<std::string>() << '\n';
  }
}

int exit_code_for(const Response& response) {
  if (response.status < 300) return 0;
  const auto code = parse_error_code(response.body.value("code", ""));
  return code && is_validation_error(*code) ? 1 : 2;
}

using Printer = std::function<void(const Json&, std::ostream&)>;

void print_json_pretty(const Json& body, std::ostream& out) { out << body.dump(2) << '\n'; }

// Runs requests against the local data directory or the remote service.
class Dispatcher {
 public:
  explicit Dispatcher(const Globals& globals) : globals_(globals) {}

  Response send(Request request) {
    if (!globals_.url.empty()) return http_call(globals_.url, request);
    if (!service_) service_ = std::make_unique<Service>(globals_.data_dir);
    return service_->handle(request);
  }

 private:
  const Globals& globals_;
  std::unique_ptr<Service> service_;
};

int serve(const std::string& data_dir, const std::string& host, int port, std::ostream& out) {
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  Service service(data_dir);
  HttpServer server(service);
  const int bound = server.bind(host, port);
  out << "listening on http://" << host << ':' << bound << '\n' << std::flush;
  std::thread waiter([&] {
    int received = 0;
    sigwait(&signals, &received);
    server.stop();
  });
  server.listen();
  // listen() returned on its own: wake the waiter.
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  service.wait_idle();
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  Globals globals;
  if (const char* env = std::getenv("MAPSS_DATA_DIR")) {
    globals.data_dir = env;
  } else {
    globals.data_dir = "mapss-data";
  }

  CLI::App app{"Partner and service selection for virtual organizations", "mapss"};
  app.fallthrough();
  app.require_subcommand(1);
  app.add_option("--data-dir", globals.data_dir, "Local data directory");
  app.add_option("--url", globals.url, "Remote service base URL, e.g. http://127.0.0.1:8080");
  app.add_flag("--json", globals.json, "Machine-readable output");

  // Each leaf command fills `request` (and optionally a follow-up) and a printer.
  std::optional<Request> request;
  Printer printer = print_json_pretty;
  std::function<int()> custom;
  std::function<std::optional<Request>(const Response&)> follow_up;
  bool validate_only = false;

  // registry
  auto* registry = app.add_subcommand("registry", "Partners and services");
  registry->require_subcommand(1);
  std::string import_path;
  auto* reg_import = registry->add_subcommand("import", "Import a registry document");
  reg_import->add_option("file", import_path, "Document path or - for stdin")->required();
  reg_import->callback([&] {
    request = Request{"POST", "/v1/import", {}, read_document(import_path, in).dump()};
    printer = [](const Json& body, std::ostream& o) { o << "imported " << body["imported"] << " entities\n"; };
  });
  std::string export_path;
  auto* reg_export = registry->add_subcommand("export", "Export registry, graph and indicators");
  reg_export->add_option("-o,--output", export_path, "Write to a file instead of stdout");
  reg_export->callback([&] {
    request = Request{"GET", "/v1/export", {}, {}};
    printer = [&export_path](const Json& body, std::ostream& o) {
      if (export_path.empty()) {
        o << body.dump(2) << '\n';
      } else {
        write_json_file(export_path, body);
        o << "exported to " << export_path << '\n';
      }
    };
  });
  std::string search_kind, search_query;
  std::vector<std::string> search_where;
  auto* reg_search = registry->add_subcommand("search", "Search elements by predicates");
  reg_search->add_option("--kind", search_kind, "partner or service");
  reg_search->add_option("--where", search_where, "Predicate 'path op value [unit]'");
  reg_search->add_option("--query", search_query, "Query document path or -");
  reg_search->callback([&] {
    Json query = search_query.empty() ? Json::object() : read_document(search_query, in);
    if (!search_kind.empty()) query["kind"] = search_kind;
    if (!query.contains("where")) query["where"] = Json::array();
    for (const auto& w : search_where) query["where"].push_back(parse_where(w));
    request = Request{"POST", "/v1/elements/search", {{"limit", "1000"}}, query.dump()};
    printer = print_items;
  });
  std::string add_path;
  auto* reg_add = registry->add_subcommand("add", "Register one element");
  reg_add->add_option("file", add_path, "Element document path or -")->required();
  reg_add->callback([&] {
    request = Request{"POST", "/v1/elements", {}, read_document(add_path, in).dump()};
  });
  std::string get_id;
  auto* reg_get = registry->add_subcommand("get", "Show one element");
  reg_get->add_option("id", get_id)->required();
  reg_get->callback([&] { request = Request{"GET", "/v1/elements/" + get_id, {}, {}}; });

  // graph
  auto* graph = app.add_subcommand("graph", "Social relations");
  graph->require_subcommand(1);
  std::string graph_path;
  auto* graph_import = graph->add_subcommand("import", "Import a relations document");
  graph_import->add_option("file", graph_path, "Document path or -")->required();
  graph_import->callback([&] {
    auto doc = read_document(graph_path, in);
    if (doc.is_array()) doc = Json{{"relations", doc}};
    request = Request{"POST", "/v1/import", {}, doc.dump()};
    printer = [](const Json& body, std::ostream& o) { o << "imported " << body["imported"] << " entities\n"; };
  });
  std::string rel_id, rel_type, rel_source, rel_target, rel_file;
  std::vector<std::string> rel_attrs;
  auto* graph_add = graph->add_subcommand("add-relation", "Add one relation");
  graph_add->add_option("--id", rel_id);
  graph_add->add_option("--type", rel_type);
  graph_add->add_option("--source", rel_source);
  graph_add->add_option("--target", rel_target);
  graph_add->add_option("--attr", rel_attrs, "Attribute name=value[:unit]");
  graph_add->add_option("--file", rel_file, "Relation document path or -");
  graph_add->callback([&] {
    Json relation = rel_file.empty() ? Json::object() : read_document(rel_file, in);
    if (!rel_id.empty()) relation["id"] = rel_id;
    if (!rel_type.empty()) relation["type"] = rel_type;
    if (!rel_source.empty()) relation["source"] = rel_source;
    if (!rel_target.empty()) relation["target"] = rel_target;
    for (const auto& a : rel_attrs) {
      auto [name, value] = parse_attr(a);
      relation["attributes"][name] = value;
    }
    request = Request{"POST", "/v1/relations", {}, relation.dump()};
    printer = [](const Json& body, std::ostream& o) {
      o << "added " << body["events"][0]["subject"].get<std::string>() << '\n';
      for (const auto& n : body["notifications"]) {
        o << "alarm " << n["indicator"].get<std::string>() << " -> " << n["subscriber"].get<std::string>() << '\n';
      }
    };
  });
  std::string list_type, list_endpoint;
  auto* graph_list = graph->add_subcommand("list", "List relations");
  graph_list->add_option("--type", list_type);
  graph_list->add_option("--endpoint", list_endpoint);
  graph_list->callback([&] {
    Request r{"GET", "/v1/relations", {{"limit", "1000"}}, {}};
    if (!list_type.empty()) r.params["type"] = list_type;
    if (!list_endpoint.empty()) r.params["endpoint"] = list_endpoint;
    request = r;
    printer = print_items;
  });

  // spec
  auto* spec = app.add_subcommand("spec", "VO specifications");
  spec->require_subcommand(1);
  std::string spec_path;
  auto* spec_validate = spec->add_subcommand("validate", "Check a specification");
  spec_validate->add_option("file", spec_path, "Specification path or -")->required();
  spec_validate->callback([&] {
    request = Request{"POST", "/v1/specs/validate", {}, read_document(spec_path, in).dump()};
    validate_only = true;
    printer = [](const Json&, std::ostream& o) { o << "valid\n"; };
  });
  auto* spec_add = spec->add_subcommand("add", "Store a specification");
  spec_add->add_option("file", spec_path, "Specification path or -")->required();
  spec_add->callback([&] {
    request = Request{"POST", "/v1/specs", {}, read_document(spec_path, in).dump()};
    printer = [](const Json& body, std::ostream& o) { o << "stored " << body["id"].get<std::string>() << '\n'; };
  });
  auto* spec_list = spec->add_subcommand("list", "List stored specifications");
  spec_list->callback([&] {
    request = Request{"GET", "/v1/specs", {{"limit", "1000"}}, {}};
    printer = print_items;
  });

  // run
  auto* run = app.add_subcommand("run", "Selection runs");
  run->require_subcommand(1);
  std::string run_spec, run_until = "specified", run_snapshot;
  std::optional<std::uint64_t> run_seed;
  std::optional<std::size_t> ga_population, ga_generations, ga_top_k;
  std::optional<double> run_threshold;
  bool run_oracle = false;
  auto* run_start = run->add_subcommand("start", "Start a run");
  run_start->add_option("--spec", run_spec, "Specification path, - or stored spec id")->required();
  run_start->add_option("--seed", run_seed);
  run_start->add_option("--ga-population", ga_population);
  run_start->add_option("--ga-generations", ga_generations);
  run_start->add_option("--top-k", ga_top_k, "Maximum number of variants kept");
  run_start->add_option("--threshold", run_threshold, "Phase-3 fitness threshold");
  run_start->add_flag("--oracle", run_oracle, "Exhaustive enumeration instead of the GA");
  run_start->add_option("--snapshot", run_snapshot, "Run against a stored snapshot instead of the current store");
  run_start->add_option("--until", run_until, "Advance up to this state")
      ->check(CLI::IsMember({"specified", "candidates_selected", "variants_generated", "performance_ranked"}));
  run_start->callback([&] {
    Json body{{"oracle", run_oracle}};
    if (run_spec != "-" && !std::filesystem::exists(run_spec)) {
      body["spec_id"] = run_spec;
    } else {
      body["spec"] = read_document(run_spec, in);
    }
    Json ga = Json::object();
    if (run_seed) ga["seed"] = *run_seed;
    if (ga_population) ga["population_size"] = *ga_population;
    if (ga_generations) ga["generations"] = *ga_generations;
    if (ga_top_k) ga["top_k"] = *ga_top_k;
    body["ga"] = ga;
    if (run_threshold) body["threshold"] = *run_threshold;
    if (!run_snapshot.empty()) body["snapshot"] = run_snapshot;
    request = Request{"POST", "/v1/runs", {}, body.dump()};
    printer = print_run;
    const int phases = static_cast<int>(*parse_run_state(run_until));
    if (phases > 0) {
      follow_up = [phases](const Response& created) -> std::optional<Request> {
        const auto id = created.body["run_id"].get<std::string>();
        return Request{"POST", "/v1/runs/" + id + "/advance", {}, Json{{"phases", phases}}.dump()};
      };
    }
  });
  std::string run_id;
  std::size_t advance_phases = 1;
  bool advance_async = false;
  auto* run_advance = run->add_subcommand("advance", "Execute the next phase");
  run_advance->add_option("run", run_id)->required();
  run_advance->add_option("--phases", advance_phases, "Number of phases to execute");
  run_advance->add_flag("--async", advance_async, "Return immediately and poll the run");
  run_advance->callback([&] {
    request = Request{"POST", "/v1/runs/" + run_id + "/advance", {},
                      Json{{"phases", advance_phases}, {"async", advance_async}}.dump()};
    printer = print_run;
  });
  std::string loop_target, loop_spec;
  std::optional<double> loop_threshold;
  auto* run_loop = run->add_subcommand("loopback", "Return to an earlier state");
  run_loop->add_option("run", run_id)->required();
  run_loop->add_option("--target", loop_target)->required();
  run_loop->add_option("--spec", loop_spec, "Amended specification path or -");
  run_loop->add_option("--threshold", loop_threshold, "Amend the phase-3 threshold");
  run_loop->callback([&] {
    Json body{{"target", loop_target}};
    if (!loop_spec.empty()) body["spec"] = read_document(loop_spec, in);
    if (loop_threshold) body["threshold"] = *loop_threshold;
    request = Request{"POST", "/v1/runs/" + run_id + "/loopback", {}, body.dump()};
    printer = print_run;
  });
  auto* run_variants = run->add_subcommand("variants", "List generated or ranked variants");
  run_variants->add_option("run", run_id)->required();
  run_variants->callback([&] {
    request = Request{"GET", "/v1/runs/" + run_id + "/variants", {{"limit", "1000"}}, {}};
    printer = print_variants;
  });
  std::vector<std::string> incept_variant;
  bool incept_override = false;
  auto* run_incept = run->add_subcommand("incept", "Register the chosen variant as a VO");
  run_incept->add_option("run", run_id)->required();
  run_incept->add_option("--variant", incept_variant, "Element ids in role order (default: best ranked)")
      ->delimiter(',');
  run_incept->add_flag("--override-stale", incept_override);
  run_incept->callback([&] {
    Json body{{"override_stale", incept_override}};
    if (!incept_variant.empty()) body["assignment"] = incept_variant;
    request = Request{"POST", "/v1/runs/" + run_id + "/incept", {}, body.dump()};
    printer = [](const Json& body, std::ostream& o) {
      o << "incepted " << body["vo_id"].get<std::string>() << '\n';
      for (const auto& c : body["element"]["competences"]) o << "  competence " << c["competence_name"].get<std::string>() << '\n';
    };
  });
  auto* run_show = run->add_subcommand("show", "Show a run");
  run_show->add_option("run", run_id)->required();
  run_show->callback([&] {
    request = Request{"GET", "/v1/runs/" + run_id, {}, {}};
    printer = print_run;
  });
  auto* run_events = run->add_subcommand("events", "Show the event log of a run");
  run_events->add_option("run", run_id)->required();
  run_events->callback([&] {
    request = Request{"GET", "/v1/runs/" + run_id + "/events", {{"limit", "1000"}}, {}};
    printer = [](const Json& body, std::ostream& o) {
      for (const auto& e : body["items"]) {
        o << e["seq"] << ' ' << e["type"].get<std::string>() << ' ' << e["from"].get<std::string>() << " -> "
          << e["to"].get<std::string>() << '\n';
      }
    };
  });
  auto* run_replay = run->add_subcommand("replay", "Re-execute the event log and compare");
  run_replay->add_option("run", run_id)->required();
  run_replay->callback([&] {
    request = Request{"POST", "/v1/runs/" + run_id + "/replay", {}, {}};
    printer = [](const Json& body, std::ostream& o) {
      o << (body["identical"].get<bool>() ? "replay identical\n" : "replay DIFFERS\n");
    };
  });
  auto* run_list = run->add_subcommand("list", "List runs");
  run_list->callback([&] {
    request = Request{"GET", "/v1/runs", {{"limit", "1000"}}, {}};
    printer = print_items;
  });

  // indicators
  auto* indicators = app.add_subcommand("indicators", "Monitoring indicators");
  indicators->require_subcommand(1);
  std::string indicator_path, indicator_id;
  auto* ind_define = indicators->add_subcommand("define", "Define an indicator");
  ind_define->add_option("file", indicator_path, "Indicator document path or -")->required();
  ind_define->callback([&] {
    request = Request{"POST", "/v1/indicators", {}, read_document(indicator_path, in).dump()};
    printer = [](const Json& body, std::ostream& o) {
      o << "defined " << body["indicator"].get<std::string>() << " = "
        << (body["value"]["value"].is_null() ? std::string("n/a") : fmt(body["value"]["value"].get<double>()))
        << (body["alarm_active"].get<bool>() ? " (alarm holds)" : "") << '\n';
    };
  });
  auto* ind_eval = indicators->add_subcommand("eval", "Evaluate an indicator");
  ind_eval->add_option("id", indicator_id)->required();
  ind_eval->callback([&] {
    request = Request{"GET", "/v1/indicators/" + indicator_id, {}, {}};
    printer = [](const Json& body, std::ostream& o) {
      const auto& v = body["value"];
      o << body["definition"]["id"].get<std::string>() << " = "
        << (v["value"].is_null() ? "n/a (" + v.value("error", "") + ")" : fmt(v["value"].get<double>()))
        << (body["alarm_active"].get<bool>() ? " (alarm holds)" : "") << '\n';
    };
  });
  std::size_t feed_cursor = 0;
  std::string feed_subscriber;
  auto* ind_feed = indicators->add_subcommand("feed", "Show alarm notifications");
  ind_feed->add_option("--cursor", feed_cursor);
  ind_feed->add_option("--subscriber", feed_subscriber);
  ind_feed->callback([&] {
    Request r{"GET", "/v1/notifications", {{"cursor", std::to_string(feed_cursor)}, {"limit", "1000"}}, {}};
    if (!feed_subscriber.empty()) r.params["subscriber"] = feed_subscriber;
    request = r;
    printer = print_items;
  });
  auto* ind_list = indicators->add_subcommand("list", "List indicators");
  ind_list->callback([&] {
    request = Request{"GET", "/v1/indicators", {{"limit", "1000"}}, {}};
    printer = print_items;
  });

  // snapshot
  auto* snapshot = app.add_subcommand("snapshot", "Content-addressed store snapshots");
  snapshot->require_subcommand(1);
  snapshot->add_subcommand("create", "Capture the current store")->callback([&] {
    request = Request{"POST", "/v1/snapshots", {}, {}};
    printer = [](const Json& body, std::ostream& o) { o << body["id"].get<std::string>() << '\n'; };
  });
  std::string snapshot_id;
  auto* snap_get = snapshot->add_subcommand("get", "Print a snapshot");
  snap_get->add_option("id", snapshot_id)->required();
  snap_get->callback([&] { request = Request{"GET", "/v1/snapshots/" + snapshot_id, {}, {}}; });

  // serve
  int port = 8080;
  std::string host = "127.0.0.1";
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  serve_cmd->add_option("--port", port);
  serve_cmd->add_option("--host", host);
  serve_cmd->callback([&] { custom = [&] { return serve(globals.data_dir, host, port, out); }; });

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return 0;
    } catch (const CLI::ParseError& e) {
      err << "error: " << e.what() << "\n\n" << app.help();
      return 1;
    }
  } catch (const Error& error) {
    err << "error: " << to_string(error.code()) << ": " << error.what() << '\n';
    return is_validation_error(error.code()) ? 1 : 2;
  }

  try {
    if (custom) return custom();
    if (!request) {
      err << app.help();
      return 1;
    }
    Dispatcher dispatcher(globals);
    Response response = dispatcher.send(*request);
    if (response.status < 300 && follow_up) {
      if (auto next = follow_up(response)) response = dispatcher.send(*next);
    }
    const int code = exit_code_for(response);
    if (globals.json) {
      out << response.body.dump(2) << '\n';
    } else if (code == 0) {
      printer(response.body, out);
    } else {
      if (validate_only) out << "invalid\n";
      print_error(response.body, err);
    }
    return code;
  } catch (const Error& error) {
    if (globals.json) out << error_to_json(error).dump(2) << '\n';
    err << "error: " << to_string(error.code()) << ": " << error.what() << '\n';
    return is_validation_error(error.code()) ? 1 : 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace mapss
