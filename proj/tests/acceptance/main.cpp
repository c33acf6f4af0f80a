// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include "mapss/ga.hpp"
#include "mapss/json_io.hpp"
#include "mapss/performance.hpp"
#include "mapss/pipeline.hpp"
#include "mapss/selection.hpp"
#include "mapss/store.hpp"
#include "mapss/vo_spec.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"
#include "support/testing.hpp"

using namespace mapss;
using namespace mapss::test;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

// Counts violations and keeps the first few messages.
class Tally {
 public:
  void expect(bool ok, const std::string& what) {
    ++checks_;
    if (ok) return;
    ++failures_;
    if (failures_ <= 3) messages_ += (messages_.empty() ? "" : "; ") + what;
  }
  Verdict verdict(const std::string& summary) const {
    if (failures_ == 0) return {true, summary};
    return {false, std::to_string(failures_) + " of " + std::to_string(checks_) + " checks failed: " + messages_};
  }

 private:
  std::size_t checks_ = 0;
  std::size_t failures_ = 0;
  std::string messages_;
};

bool no_duplicates(const Genome& genome, const std::vector<bool>& exclusive) {
  std::set<std::string> held;
  for (std::size_t i = 0; i < genome.assignment.size(); ++i) {
    if (i < exclusive.size() && exclusive[i] && !held.insert(genome.assignment[i]).second) return false;
  }
  return true;
}

CandidateSets sets_of(const std::vector<std::vector<std::string>>& pools) {
  CandidateSets sets;
  for (std::size_t i = 0; i < pools.size(); ++i) {
    CandidateSet set{"r" + std::to_string(i), {}};
    for (const auto& id : pools[i]) set.candidates.push_back({id, 1.0});
    sets.push_back(set);
  }
  return sets;
}

Verdict oracle_equivalence() {
  const auto started = std::chrono::steady_clock::now();
  Tally tally;
  std::size_t worst = 10;
  for (std::uint64_t instance_seed = 1; instance_seed <= 20; ++instance_seed) {
    auto instance = random_instance(instance_seed);
    instance.spec.thresholds.phase3_threshold = 0.0;
    std::size_t genomes = 1;
    for (const auto& pool : instance.pools) genomes *= pool.size();
    tally.expect(instance.pools.size() <= 4 && genomes <= 256 &&
                     instance.spec.protocol.schema.requirements.size() <= 6,
                 "instance " + std::to_string(instance_seed) + " outside the shape");
    const auto fitness = fitness_of(instance.spec, instance.snapshot);
    const auto exact = enumerate_all(instance.spec, instance.sets, fitness);
    if (exact.empty()) {
      tally.expect(false, "no genomes for instance " + std::to_string(instance_seed));
      continue;
    }
    std::size_t hits = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      GAConfig config;
      config.population_size = 50;
      config.generations = 100;
      config.seed = seed;
      const auto found = run_ga(instance.spec, instance.sets, config, fitness);
      hits += !found.empty() && found.front().fitness == exact.front().fitness;
    }
    worst = std::min(worst, hits);
    tally.expect(hits >= 9, "instance " + std::to_string(instance_seed) + " hit " + std::to_string(hits) + "/10");
  }
  const auto seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  tally.expect(seconds < 60.0, "took " + std::to_string(seconds) + " s");
  std::ostringstream summary;
  summary << "20 instances x 10 seeds, worst " << worst << "/10, " << std::fixed << std::setprecision(1) << seconds
          << " s";
  return tally.verdict(summary.str());
}

std::string full_run(const VOSpecification& spec, const std::function<std::shared_ptr<const Snapshot>()>& make,
                     std::uint64_t seed) {
  const auto snapshot = make();
  GAConfig config;
  config.seed = seed;
  auto run = start_run(spec, *snapshot, config);
  for (int phase = 0; phase < 3; ++phase) advance(run, snapshot);
  return variants_document(run).dump();
}

Verdict determinism() {
  Tally tally;
  auto fixture = [] {
    Store store;
    load_fixture(store);
    return store.snapshot();
  };
  const auto a = full_run(fixture_spec(), fixture, 42);
  const auto b = full_run(fixture_spec(), fixture, 42);
  tally.expect(a == b, "fixture variants differ");
  std::size_t runs = 1;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto make = [seed] { return random_instance(seed).snapshot; };
    const auto spec = random_instance(seed).spec;
    tally.expect(full_run(spec, make, seed) == full_run(spec, make, seed), "instance " + std::to_string(seed) + " differs");
    ++runs;
  }
  return tally.verdict(std::to_string(runs) + " pipeline runs repeated byte-identically");
}

Verdict operators() {
  Tally tally;
  Rng rng(2718);
  // crossover provenance
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = uniform_int(rng, 1, 8);
    Genome a, b;
    for (std::size_t i = 0; i < n; ++i) {
      a.assignment.push_back("a" + std::to_string(uniform_int(rng, 0, 4)));
      b.assignment.push_back("b" + std::to_string(uniform_int(rng, 0, 4)));
    }
    const auto cut_a = uniform_int(rng, 0, n - 1);
    const auto cut_b = uniform_int(rng, cut_a + 1, n);
    const auto [c1, c2] = crossover(a, b, cut_a, cut_b);
    for (std::size_t i = 0; i < n; ++i) {
      const bool from_parent = (c1.assignment[i] == a.assignment[i] || c1.assignment[i] == b.assignment[i]) &&
                               (c2.assignment[i] == a.assignment[i] || c2.assignment[i] == b.assignment[i]);
      tally.expect(from_parent, "crossover gene not from a parent");
    }
  }
  // mutation distance
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = uniform_int(rng, 1, 5);
    std::vector<std::vector<std::string>> pools;
    Genome start;
    bool singleton = false;
    for (std::size_t p = 0; p < n; ++p) {
      const auto size = uniform_int(rng, 1, 4);
      singleton = singleton || size == 1;
      std::vector<std::string> pool;
      for (std::size_t c = 0; c < size; ++c) pool.push_back("e" + std::to_string(p) + "_" + std::to_string(c));
      start.assignment.push_back(pool[uniform_int(rng, 0, size - 1)]);
      pools.push_back(std::move(pool));
    }
    const auto mutated = mutate(start, sets_of(pools), rng);
    std::size_t distance = 0;
    for (std::size_t p = 0; p < n; ++p) distance += mutated.assignment[p] != start.assignment[p];
    tally.expect(distance <= 1, "mutation changed " + std::to_string(distance) + " genes");
    tally.expect(distance == 1 || singleton, "mutation kept the genome without a singleton pool");
  }
  // exclusivity repair, exclusive mutation and the GA output
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = uniform_int(rng, 2, 5);
    std::vector<std::vector<std::string>> pools;
    std::vector<bool> exclusive;
    Genome genome;
    for (std::size_t p = 0; p < n; ++p) {
      std::vector<std::string> pool;
      for (std::size_t c = 0; c < 6; ++c) {
        if (rng.uniform01() < 0.5) pool.push_back("P" + std::to_string(c));
      }
      if (pool.empty()) pool.push_back("P0");
      genome.assignment.push_back(pool[uniform_int(rng, 0, pool.size() - 1)]);
      pools.push_back(std::move(pool));
      exclusive.push_back(rng.uniform01() < 0.8);
    }
    const auto sets = sets_of(pools);
    Genome repaired = genome;
    if (repair_exclusivity(repaired, sets, exclusive)) {
      tally.expect(no_duplicates(repaired, exclusive), "repair left a duplicate");
      const auto mutated = mutate(repaired, sets, rng, exclusive);
      tally.expect(no_duplicates(mutated, exclusive), "exclusive mutation introduced a duplicate");
    }
    if (trial % 20 == 0) {
      GAConfig config;
      config.population_size = 12;
      config.generations = 10;
      config.seed = static_cast<std::uint64_t>(trial);
      const auto result = run_ga(SearchSpace{sets, exclusive, 0.0}, config, [](const Genome& g) {
        return static_cast<double>(g.assignment.front().back() - '0') / 10.0;
      });
      for (const auto& v : result.variants) tally.expect(no_duplicates(v.genome, exclusive), "GA emitted a duplicate");
    }
  }
  return tally.verdict("1000 trials each for crossover, mutation and exclusivity");
}

Verdict threshold_contract() {
  Tally tally;
  Rng rng(4242);
  std::size_t emitted = 0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    auto instance = random_instance(100 + trial);
    const double t = uniform(rng, 0.0, 1.0);
    instance.spec.thresholds.phase3_threshold = t;
    const auto fitness = fitness_of(instance.spec, instance.snapshot);
    GAConfig config;
    config.population_size = 16;
    config.generations = 15;
    config.seed = trial;
    for (const auto& v : run_ga(instance.spec, instance.sets, config, fitness)) {
      tally.expect(v.fitness >= t, "GA variant below the threshold");
      ++emitted;
    }
    std::set<std::vector<std::string>> expected;
    const std::vector<bool> shared(instance.pools.size(), false);
    for (const auto& genes : oracle_all_genomes(instance.pools, shared)) {
      if (fitness(to_assignment(Genome{genes}, instance.sets)) >= t) expected.insert(genes);
    }
    std::set<std::vector<std::string>> got;
    std::size_t count = 0;
    for (const auto& v : enumerate_all(instance.spec, instance.sets, fitness)) {
      tally.expect(v.fitness >= t, "enumerated variant below the threshold");
      got.insert(v.genome.assignment);
      ++count;
    }
    tally.expect(got == expected && count == expected.size(), "enumeration differs from the filtered product");
  }
  return tally.verdict("100 random thresholds, " + std::to_string(emitted) + " GA variants checked");
}

double conformance(double x, const Role& role) {
  Registry registry;
  registry.register_element(partner("P"), {competence("P", "c", {{"x", {x, ""}}, {"y", {0.5, ""}}})});
  return registry.evaluate_conformance(registry.get("P"), role);
}

Verdict conformance_calculus() {
  Tally tally;
  Rng rng(1618);
  for (int trial = 0; trial < 1000; ++trial) {
    const double optimal = uniform(rng, 0, 100);
    double reject = uniform(rng, 0, 100);
    if (reject == optimal) reject += 1;
    const Role single{"r", ElementKind::kPartner, {numeric_requirement("capability.x", optimal, reject)}};
    tally.expect(conformance(optimal, single) == 1.0, "not 1 at optimal");
    tally.expect(conformance(reject, single) == 0.0, "not 0 at reject");
    const Role mixed{"r", ElementKind::kPartner,
                     {numeric_requirement("capability.x", optimal, reject, "", uniform(rng, 0.1, 3)),
                      numeric_requirement("capability.y", 1, 0)}};
    const double start = uniform(rng, 0, 150);
    double previous = -1;
    for (int step = 0; step <= 10; ++step) {
      const double level = conformance(std::lerp(start, optimal, step / 10.0), mixed);
      tally.expect(level >= previous, "conformance dropped moving toward the optimum");
      previous = level;
    }
  }
  return tally.verdict("1000 requirement/element pairs, anchors exact");
}

Verdict performance_dag() {
  Tally tally;
  Rng rng(314);
  for (int trial = 0; trial < 100; ++trial) {
    const auto dag = random_dag(rng, 10);
    const double expected = oracle_longest_path(dag.weights, dag.edges);
    tally.expect(longest_path(dag.weights, dag.edges) == expected, "longest path differs");
    const auto process = dag_process(dag);
    const auto vector = performance_fitness_of(process.spec, process.snapshot).evaluate(process.assignment);
    tally.expect(!vector.values.empty() && vector.values[0] == expected, "process duration differs");
  }
  return tally.verdict("100 random DAGs, direct and through the process model");
}

Verdict ranking() {
  Tally tally;
  Rng rng(2024);
  auto argsort = [](const std::vector<RankedEntry>& ranked) {
    std::vector<std::size_t> out;
    for (const auto& e : ranked) out.push_back(e.index);
    return out;
  };
  for (int trial = 0; trial < 100; ++trial) {
    const auto arity = uniform_int(rng, 1, 4);
    std::vector<Objective> objectives;
    for (std::size_t c = 0; c < arity; ++c) objectives.push_back({rng.uniform_index(2) == 0, uniform(rng, 0.1, 5)});
    std::vector<RankItem> items;
    std::vector<std::vector<double>> vectors;
    std::vector<bool> minimize;
    for (const auto& o : objectives) minimize.push_back(o.minimize);
    const auto count = uniform_int(rng, 1, 15);
    for (std::size_t i = 0; i < count; ++i) {
      std::vector<double> v;
      for (std::size_t c = 0; c < arity; ++c) v.push_back(static_cast<double>(uniform_int(rng, 0, 8)));
      vectors.push_back(v);
      items.push_back(RankItem{Genome{{"g" + std::to_string(i)}}, {v.begin(), v.end()}});
    }
    const double factor = uniform(rng, 0.01, 1000);
    auto scaled = objectives;
    for (auto& o : scaled) o.weight *= factor;
    tally.expect(argsort(rank(items, objectives, RankingKind::kWeightedSum)) ==
                     argsort(rank(items, scaled, RankingKind::kWeightedSum)),
                 "scaling changed the order");
    std::vector<std::size_t> front;
    for (const auto& e : rank(items, objectives, RankingKind::kPareto)) {
      if (e.front == 1u) front.push_back(e.index);
    }
    std::sort(front.begin(), front.end());
    tally.expect(front == oracle_non_dominated(vectors, minimize), "pareto front differs");
  }
  return tally.verdict("100 scaling trials, 100 pareto fronts");
}

Indicator count_indicator(const std::string& id, const Json& expression, Alarm alarm, std::vector<std::string> subscribers) {
  Indicator ind;
  ind.id = id;
  ind.name = id;
  ind.expression = parse_expression(expression);
  ind.alarm = alarm;
  ind.subscribers = std::move(subscribers);
  return ind;
}

Verdict monitoring() {
  Tally tally;
  const auto masons = Json::parse(R"({"op": "count", "query": {"source": "elements", "kind": "partner",
    "where": [{"path": "competence", "op": "eq", "value": "masonry"}]}})");
  {
    Store store;
    store.define_indicator(count_indicator("masons", masons, Alarm{CompareOp::kGe, 2}, {"planner", "auditor"}));
    tally.expect(store.register_element(partner("P1"), {competence("P1", "masonry")}).notifications.empty(),
                 "notified below the threshold");
    const auto crossing = store.register_element(partner("P2"), {competence("P2", "masonry")});
    std::map<std::string, int> per;
    for (const auto& n : crossing.notifications) ++per[n.subscriber];
    tally.expect(per == std::map<std::string, int>{{"auditor", 1}, {"planner", 1}}, "not one per subscriber");
    tally.expect(store.register_element(partner("P3"), {competence("P3", "masonry")}).notifications.empty(),
                 "notified again while true");
    tally.expect(store.update_element(partner("P3"), {competence("P3", "masonry")}).notifications.empty(),
                 "notified on an update while true");
    for (int i = 0; i < 5; ++i) store.evaluate_indicator("masons");
    tally.expect(store.feed().size() == 2, "feed grew on re-evaluation");
  }
  const std::vector<Json> expressions = {
      masons,
      Json::parse(R"({"op": "count", "query": {"source": "relations", "type": "past_cooperation"}})"),
      Json::parse(R"({"op": "sum", "query": {"source": "elements", "project": "capability.workers"}})"),
      Json::parse(R"({"op": "max", "query": {"source": "relations", "project": "volume"}})"),
  };
  std::size_t events = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    Store store;
    std::vector<Indicator> defined;
    std::map<std::string, bool> held;
    for (std::size_t i = 0; i < expressions.size(); ++i) {
      defined.push_back(count_indicator("i" + std::to_string(i), expressions[i],
                                        Alarm{CompareOp::kGe, static_cast<double>(uniform_int(rng, 1, 6))},
                                        {"s" + std::to_string(i)}));
      store.define_indicator(defined.back());
      held[defined.back().id] = store.indicator_state(defined.back().id).alarm_active;
    }
    std::vector<std::string> ids;
    for (int step = 0; step < 40; ++step) {
      MutationResult result;
      const auto choice = uniform_int(rng, 0, 2);
      if (choice == 0 || ids.size() < 2) {
        const std::string id = "P" + std::to_string(ids.size());
        result = store.register_element(
            partner(id), {competence(id, uniform_int(rng, 0, 1) ? "masonry" : "roofing",
                                     {{"workers", {static_cast<double>(uniform_int(rng, 0, 3)), ""}}})});
        ids.push_back(id);
      } else if (choice == 1) {
        const auto& id = ids[uniform_int(rng, 0, ids.size() - 1)];
        result = store.update_element(partner(id), {competence(id, uniform_int(rng, 0, 1) ? "masonry" : "roofing")});
      } else {
        result = store.add_relation(relation("r" + std::to_string(step), "past_cooperation",
                                              ids[uniform_int(rng, 0, ids.size() - 1)],
                                              ids[uniform_int(rng, 0, ids.size() - 1)],
                                              {{"volume", AttributeValue::number(static_cast<double>(uniform_int(rng, 0, 9)))}}));
      }
      ++events;
      const auto snapshot = store.snapshot();
      std::size_t expected = 0;
      for (const auto& ind : defined) {
        const auto full = evaluate_expression(ind.expression, snapshot->context());
        tally.expect(store.indicator_state(ind.id).last == full, "incremental value differs from recomputation");
        const bool holds = alarm_holds(*ind.alarm, full);
        expected += holds && !held[ind.id];
        held[ind.id] = holds;
      }
      tally.expect(result.notifications.size() == expected, "notification count not edge triggered");
    }
  }
  return tally.verdict("scripted crossing plus " + std::to_string(events) + " random events");
}

Verdict malformed_corpus() {
  Tally tally;
  const auto manifest = load_json("fixtures/malformed_specs/manifest.json");
  tally.expect(manifest.size() == 10, "corpus does not have 10 specs");
  std::size_t rejected = 0;
  for (const auto& entry : manifest) {
    const auto file = entry.at("file").get<std::string>();
    const auto violations = validate_spec(load_json("fixtures/malformed_specs/" + file).get<VOSpecification>());
    const bool ok = !violations.empty() &&
                    std::all_of(violations.begin(), violations.end(), [&](const Violation& v) {
                      return std::string(to_string(v.category)) == entry.at("category").get<std::string>();
                    });
    tally.expect(ok, file);
    rejected += ok;
  }
  return tally.verdict(std::to_string(rejected) + "/" + std::to_string(manifest.size()) + " rejected with the right category");
}

struct Shell {
  int code = 0;
  std::string out;
};

Shell sh(const std::string& command) {
  Shell result;
  FILE* pipe = ::popen((command + " 2>/dev/null").c_str(), "r");
  if (!pipe) return {-1, {}};
  char buffer[4096];
  std::size_t n = 0;
  while ((n = std::fread(buffer, 1, sizeof buffer, pipe)) > 0) result.out.append(buffer, n);
  const int status = ::pclose(pipe);
  result.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

Verdict end_to_end() {
  Tally tally;
  TempDir dir("acceptance");
  const std::string cli = std::string(MAPSS_CLI_PATH) + " --data-dir " + dir.path().string();
  const auto fixtures = (source_dir() / "fixtures/vo3x3").string();
  auto json = [&](const std::string& args, const std::string& what) {
    const auto r = sh(cli + " --json " + args);
    tally.expect(r.code == 0, what + " exited " + std::to_string(r.code));
    return r.code == 0 ? Json::parse(r.out) : Json::object();
  };

  tally.expect(sh(cli + " registry import " + fixtures + "/registry.json").code == 0, "registry import");
  tally.expect(sh(cli + " graph import " + fixtures + "/graph.json").code == 0, "graph import");
  auto run = json("run start --seed 7 --spec " + fixtures + "/spec.json", "run start");
  if (!run.contains("run_id")) return tally.verdict("");
  const auto id = run.at("run_id").get<std::string>();
  const auto snapshot = run.at("snapshot").get<std::string>();
  for (const char* state : {"candidates_selected", "variants_generated", "performance_ranked"}) {
    run = json("run advance " + id, "advance");
    tally.expect(run.value("state", "") == state, std::string("expected ") + state);
  }
  if (!run.contains("ranked") || !run["ranked"].is_array() || run["ranked"].empty()) {
    tally.expect(false, "no ranked variants");
    return tally.verdict("");
  }
  const auto chosen = run["ranked"][0].at("assignment").get<std::vector<std::string>>();
  const auto incepted = json("run incept " + id, "incept");
  tally.expect(json("run show " + id, "show").value("state", "") == "incepted", "run not incepted");
  const auto vo = incepted.value("vo_id", "");

  // union of the members' competences, read straight from the fixture
  std::set<std::string> expected;
  const auto registry = load_json("fixtures/vo3x3/registry.json");
  for (const auto& c : registry.at("competences")) {
    if (std::find(chosen.begin(), chosen.end(), c.at("owner_id").get<std::string>()) != chosen.end()) {
      expected.insert(c.at("competence_name").get<std::string>());
    }
  }
  const auto element = json("registry get " + vo, "registry get");
  std::set<std::string> got;
  for (const auto& c : element.value("competences", Json::array())) got.insert(c.at("competence_name").get<std::string>());
  tally.expect(!expected.empty() && got == expected, "VO competences are not the members' union");
  for (const auto& name : expected) {
    const auto found = json("registry search --where 'competence eq " + name + "'", "search");
    bool listed = false;
    for (const auto& e : found.value("items", Json::array())) listed = listed || e.at("id") == vo;
    tally.expect(listed, "VO not found by " + name);
  }

  const auto rerun = json("run start --oracle --snapshot " + snapshot + " --until performance_ranked --spec " + fixtures +
                              "/spec.json",
                          "oracle rerun");
  const bool same = rerun.contains("ranked") && rerun["ranked"].is_array() && !rerun["ranked"].empty() &&
                    rerun["ranked"][0].at("assignment").get<std::vector<std::string>>() == chosen;
  tally.expect(same, "oracle rerun chose another variant");
  std::string members;
  for (const auto& m : chosen) members += (members.empty() ? "" : ",") + m;
  return tally.verdict("specified -> incepted as " + vo + " [" + members + "], oracle agrees");
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"oracle equivalence", oracle_equivalence},
      {"determinism", determinism},
      {"crossover/mutation operators", operators},
      {"threshold contract", threshold_contract},
      {"conformance calculus", conformance_calculus},
      {"performance DAG", performance_dag},
      {"ranking", ranking},
      {"monitoring", monitoring},
      {"aspect/phase enforcement", malformed_corpus},
      {"end-to-end CLI", end_to_end},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict verdict;
    try {
      verdict = criteria[i].second();
    } catch (const std::exception& e) {
      verdict = {false, std::string("exception: ") + e.what()};
    }
    failed += !verdict.pass;
    std::cout << (verdict.pass ? "PASS" : "FAIL") << "  criterion " << i + 1 << " (" << criteria[i].first
              << "): " << verdict.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
