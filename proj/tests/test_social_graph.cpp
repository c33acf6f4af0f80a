#include <doctest.h>

#include <algorithm>

#include "mapss/registry.hpp"
#include "mapss/social_graph.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"
#include "support/testing.hpp"

using namespace mapss;
using namespace mapss::test;

namespace {

Registry three_partners() {
  Registry registry;
  for (const char* id : {"P1", "P2", "P3"}) registry.register_element(partner(id));
  return registry;
}

SocialRequirement requirement(std::string id, std::string type, Direction direction = Direction::kEither) {
  SocialRequirement r;
  r.id = std::move(id);
  r.between = {"A", "B"};
  r.relation_type = std::move(type);
  r.direction = direction;
  return r;
}

std::vector<std::string> relation_ids(const std::vector<const Relation*>& relations) {
  std::vector<std::string> out;
  for (const auto* r : relations) out.push_back(r->id);
  return out;
}

const Assignment kAB{{"A", "P1"}, {"B", "P2"}};

}  // namespace

TEST_CASE("added relation is visible from its endpoint") {
  auto registry = three_partners();
  SocialGraph graph;
  graph.add_relation(relation("r1", "past_cooperation", "P1", "P2"), registry);
  CHECK(relation_ids(graph.relations({std::nullopt, "P1"})) == std::vector<std::string>{"r1"});
  CHECK(relation_ids(graph.relations({std::nullopt, "P2"})) == std::vector<std::string>{"r1"});
  CHECK(graph.relations({std::nullopt, "P3"}).empty());
}

TEST_CASE("dangling endpoints, duplicates and empty types are rejected") {
  auto registry = three_partners();
  SocialGraph graph;
  try {
    graph.add_relation(relation("r1", "past_cooperation", "P1", "P9"), registry);
    FAIL("dangling accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDanglingReference);
    CHECK(e.detail() == "P9");
  }
  graph.add_relation(relation("r1", "past_cooperation", "P1", "P2"), registry);
  try {
    graph.add_relation(relation("r1", "recognition", "P2", "P3"), registry);
    FAIL("duplicate accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDuplicateId);
  }
  CHECK_THROWS_AS(graph.add_relation(relation("r2", "", "P1", "P2"), registry), Error);
  CHECK(graph.size() == 1);
}

TEST_CASE("services take part in relations too") {
  auto registry = three_partners();
  registry.register_element(service("S1", "P1"));
  SocialGraph graph;
  CHECK_NOTHROW(graph.add_relation(relation("u1", "use_of_service", "P2", "S1"), registry));
  CHECK_NOTHROW(graph.add_relation(relation("u2", "recommendation", "S1", "S1"), registry));
}

TEST_CASE("type filter over the fixture graph matches a direct filter of the document") {
  Registry registry;
  {
    Store store;
    load_fixture(store);
    registry = store.snapshot()->registry;
  }
  const auto document = load_json("fixtures/vo3x3/graph.json");
  SocialGraph graph;
  for (const auto& r : document.at("relations")) graph.add_relation(r.get<Relation>(), registry);
  for (const std::string type : {"past_cooperation", "use_of_service", "recognition"}) {
    std::vector<std::string> expected;
    for (const auto& r : document.at("relations")) {
      if (r.at("type") == type) expected.push_back(r.at("id"));
    }
    std::sort(expected.begin(), expected.end());
    CHECK(relation_ids(graph.relations({type, std::nullopt})) == expected);
  }
  // frozen from the document filter
  CHECK(relation_ids(graph.relations({"past_cooperation", std::nullopt})) ==
        std::vector<std::string>{"coop-M1-C1", "coop-M1-C2", "coop-M2-C1", "coop-M3-C3"});
  CHECK(relation_ids(graph.relations({"use_of_service", "C1"})).size() == 1);
}

TEST_CASE("existence requirement") {
  auto registry = three_partners();
  SocialGraph graph;
  const auto req = requirement("q", "past_cooperation");
  CHECK(graph.evaluate_requirement(req, kAB) == 0.0);
  graph.add_relation(relation("r1", "past_cooperation", "P1", "P2"), registry);
  CHECK(graph.evaluate_requirement(req, kAB) == 1.0);
  CHECK(graph.evaluate_requirement(requirement("q", "recognition"), kAB) == 0.0);
}

TEST_CASE("attribute condition interpolates the best relation") {
  auto registry = three_partners();
  SocialGraph graph;
  auto req = requirement("q", "past_cooperation");
  req.attribute_condition = AttributeCondition{"volume", {10, ""}, {0, ""}};
  graph.add_relation(relation("r1", "past_cooperation", "P1", "P2", {{"volume", AttributeValue::number(5)}}), registry);
  CHECK(graph.evaluate_requirement(req, kAB) == 0.5);
  graph.add_relation(relation("r2", "past_cooperation", "P2", "P1", {{"volume", AttributeValue::number(8)}}), registry);
  CHECK(graph.evaluate_requirement(req, kAB) == doctest::Approx(0.8));
  graph.add_relation(relation("r3", "past_cooperation", "P1", "P2"), registry);  // no volume
  CHECK(graph.evaluate_requirement(req, kAB) == doctest::Approx(0.8));
}

TEST_CASE("condition unit mismatch is an error") {
  auto registry = three_partners();
  SocialGraph graph;
  auto req = requirement("q", "past_cooperation");
  req.attribute_condition = AttributeCondition{"volume", {10, "kEUR"}, {0, "kEUR"}};
  graph.add_relation(relation("r1", "past_cooperation", "P1", "P2", {{"volume", AttributeValue::number(5, "EUR")}}),
                     registry);
  CHECK_THROWS_AS(graph.evaluate_requirement(req, kAB), Error);
}

TEST_CASE("direction semantics") {
  auto registry = three_partners();
  SocialGraph graph;
  graph.add_relation(relation("r1", "recommendation", "P2", "P1"), registry);
  CHECK(graph.evaluate_requirement(requirement("d", "recommendation", Direction::kDirected), kAB) == 0.0);
  CHECK(graph.evaluate_requirement(requirement("e", "recommendation", Direction::kEither), kAB) == 1.0);
  graph.add_relation(relation("r2", "recommendation", "P1", "P2"), registry);
  CHECK(graph.evaluate_requirement(requirement("d", "recommendation", Direction::kDirected), kAB) == 1.0);
}

TEST_CASE("incomplete assignments are rejected") {
  SocialGraph graph;
  const Assignment only_a{{"A", "P1"}};
  CHECK_THROWS_AS(graph.evaluate_requirement(requirement("q", "x"), only_a), Error);
  SocialNetworkSchema schema{{"A", "B"}, {}};
  CHECK_THROWS_AS(graph.evaluate_schema(schema, only_a), Error);
}

TEST_CASE("schema evaluation") {
  auto registry = three_partners();
  SocialGraph graph;
  SocialNetworkSchema empty{{"A", "B"}, {}};
  CHECK(graph.evaluate_schema(empty, kAB).degree == 1.0);

  graph.add_relation(relation("r1", "past_cooperation", "P1", "P2"), registry);
  SocialNetworkSchema schema{{"A", "B"}, {requirement("met", "past_cooperation"), requirement("unmet", "recognition")}};
  auto result = graph.evaluate_schema(schema, kAB);
  CHECK(result.degree == 0.5);
  REQUIRE(result.breakdown.size() == 2);
  CHECK(result.breakdown[0] == RequirementDegree{"met", 1.0});
  CHECK(result.breakdown[1] == RequirementDegree{"unmet", 0.0});

  schema.requirements[0].weight = 3;
  CHECK(graph.evaluate_schema(schema, kAB).degree == 0.75);
}

TEST_CASE("random schemas agree with the compositional oracle") {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const auto instance = random_instance(seed, {4, 4, 6, 16});
    const auto& schema = instance.spec.protocol.schema;
    std::vector<bool> none(instance.pools.size(), false);
    for (const auto& genome : oracle_all_genomes(instance.pools, none)) {
      const auto plain = assignment_of(instance.spec, genome);
      const Assignment assignment(plain.begin(), plain.end());
      const auto evaluation = instance.snapshot->graph.evaluate_schema(schema, assignment);
      CHECK(evaluation.degree == doctest::Approx(oracle_schema(schema, instance.relations, plain)).epsilon(1e-12));
      CHECK(evaluation.degree >= 0.0);
      CHECK(evaluation.degree <= 1.0);
      const bool all_met = std::all_of(evaluation.breakdown.begin(), evaluation.breakdown.end(),
                                       [](const RequirementDegree& d) { return d.degree == 1.0; });
      CHECK((evaluation.degree == 1.0) == all_met);
    }
  }
}

TEST_CASE("best random schema degree frozen from the oracle") {
  const auto instance = random_instance(7, {4, 4, 6, 16});
  const auto& schema = instance.spec.protocol.schema;
  double best_oracle = 0.0;
  double best_engine = 0.0;
  std::vector<bool> none(instance.pools.size(), false);
  for (const auto& genome : oracle_all_genomes(instance.pools, none)) {
    const auto plain = assignment_of(instance.spec, genome);
    best_oracle = std::max(best_oracle, oracle_schema(schema, instance.relations, plain));
    const Assignment assignment(plain.begin(), plain.end());
    best_engine = std::max(best_engine, instance.snapshot->graph.evaluate_schema(schema, assignment).degree);
  }
  CHECK(best_engine == doctest::Approx(best_oracle));
  // frozen from the oracle
  CHECK(best_oracle == doctest::Approx(0.9));
}

TEST_CASE("adding relations never lowers a degree") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto registry = three_partners();
    SocialGraph graph;
    auto req = requirement("q", "past_cooperation", trial % 2 ? Direction::kDirected : Direction::kEither);
    req.attribute_condition = AttributeCondition{"volume", {10, ""}, {0, ""}};
    double previous = 0.0;
    for (int i = 0; i < 10; ++i) {
      const char* ends[] = {"P1", "P2", "P3"};
      graph.add_relation(relation("r" + std::to_string(i), i % 3 ? "past_cooperation" : "recognition",
                                  ends[uniform_int(rng, 0, 2)], ends[uniform_int(rng, 0, 2)],
                                  {{"volume", AttributeValue::number(uniform(rng, 0, 12))}}),
                         registry);
      const double degree = graph.evaluate_requirement(req, kAB);
      CHECK(degree >= previous);
      previous = degree;
    }
  }
}
