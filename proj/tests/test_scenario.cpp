#include <doctest.h>

#include <string>

#include "nuc/error.hpp"
#include "nuc/scenario.hpp"

using namespace nuc;

namespace {

std::string message_of(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("empty document gives the default scenario") {
  const Scenario sc = parse_scenario("");
  CHECK(sc.name == "default");
  CHECK(sc.model.grid.s == 3);
  CHECK(sc.model.grid.n == 32);
  CHECK(sc.model.grid.pmax == 8.0);
  CHECK(sc.model.r == 1.0);
  CHECK(sc.model.E == 4.0);
  CHECK(sc.model.gamma == 0.95);
  CHECK(sc.model.family_size == 20);
  CHECK(sc.epsilon == 0.1);
  CHECK(sc.fock.n_max == 6);
  CHECK(sc.K == 4);
  CHECK(sc.p == std::vector<double>{0.5, 1.0});
  CHECK(sc.scans.empty());
  CHECK(sc.configs.empty());
  CHECK(sc.seed == 42);
}

TEST_CASE("shipped scenarios load") {
  const Scenario def = load_scenario(std::string(NUC_SCENARIO_DIR) + "/default.yaml");
  CHECK(def.configs.size() == 5);
  CHECK(def.scans.size() == 3);
  CHECK(def.scans[2].sign == Sign::minus);
  CHECK(def.configs[1].points.size() == 2);
  CHECK(delta_x(def.configs[1].points) == 0.0);
  CHECK(delta_x(def.configs[3].points) == doctest::Approx(5.0));
  const Scenario far = load_scenario(std::string(NUC_SCENARIO_DIR) + "/far.yaml");
  CHECK(far.model.grid.n == 64);
  REQUIRE(far.configs.size() == 1);
  CHECK(delta_x(far.configs[0].points) == doctest::Approx(20.0).epsilon(1e-9));
  CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.yaml"), ConfigError);
}

TEST_CASE("unknown keys are rejected at every level") {
  CHECK(message_of("epsilom: 0.1") == "unknown key 'epsilom' in scenario");
  CHECK(message_of("grid: {n: 32, pmx: 8}") == "unknown key 'pmx' in grid");
  CHECK(message_of("fock: {nmax: 6}") == "unknown key 'nmax' in fock");
  CHECK(message_of("configs: [{name: a, points: [[0,0,0,0]], weight: 1}]") == "unknown key 'weight' in configs");
  CHECK(message_of("scans: [{index: 0, sgn: plus}]") == "unknown key 'sgn' in scans");
}

TEST_CASE("s = 2 is rejected with the documented reason") {
  const std::string msg = message_of("s: 2");
  CHECK(msg.find("s >= 3") != std::string::npos);
  CHECK(msg.find("infrared") != std::string::npos);
}

TEST_CASE("parameter ranges are enforced") {
  CHECK_THROWS_AS(parse_scenario("gamma: 1.0"), ConfigError);   // (s-1)/2, open end
  CHECK_NOTHROW(parse_scenario("gamma: 0.5"));
  CHECK_THROWS_AS(parse_scenario("gamma: 0.49"), ConfigError);
  CHECK_THROWS_AS(parse_scenario("epsilon: 0"), ConfigError);
  CHECK_THROWS_AS(parse_scenario("epsilon: 1"), ConfigError);
  CHECK_THROWS_AS(parse_scenario("grid: {n: 33}"), ConfigError);
  CHECK_THROWS_AS(parse_scenario("E: 9"), ConfigError);
  CHECK_THROWS_AS(parse_scenario("p: [0.5, 1.5]"), ConfigError);
  CHECK_THROWS_AS(parse_scenario("p: []"), ConfigError);
  CHECK_THROWS_AS(parse_scenario("h: {kind: gaussian}"), ConfigError);
  CHECK_THROWS_AS(parse_scenario("scans: [{scan: diagonal}]"), ConfigError);
  CHECK_THROWS_AS(parse_scenario("scans: [{sign: up}]"), ConfigError);
  CHECK_THROWS_AS(parse_scenario("grid: {n: abc}"), ConfigError);
  CHECK_THROWS_AS(parse_scenario("n_sweep: {N: [0]}"), ConfigError);
  CHECK_THROWS_AS(parse_scenario("refinement: [31]"), ConfigError);
}

TEST_CASE("configurations must be spacelike and inside the wrap radius") {
  CHECK_THROWS_AS(parse_scenario("configs: [{name: t, points: [[0,0,0,0],[2,1,0,0]]}]"), ConfigError);
  CHECK_NOTHROW(parse_scenario("configs: [{name: l, points: [[0,0,0,0],[1,1,0,0]]}]"));
  // wrap = 0.5·32·π/8 ≈ 6.28
  CHECK_THROWS_AS(parse_scenario("configs: [{name: w, points: [[0,0,0,0],[0,7,0,0]]}]"), ConfigError);
  CHECK_THROWS_AS(parse_scenario("configs: [{name: d, points: [[0,0,0]]}]"), ConfigError);
  CHECK_THROWS_AS(parse_scenario("configs: [{name: e, points: []}]"), ConfigError);
  CHECK_THROWS_AS(parse_scenario("configs: [{name: a, points: [[0,0,0,0]]}, {name: a, points: [[0,0,0,0]]}]"),
                  ConfigError);
}

TEST_CASE("echo round-trips through the parser") {
  const Scenario def = load_scenario(std::string(NUC_SCENARIO_DIR) + "/default.yaml");
  const auto echo = scenario_json(def);
  // JSON is a YAML subset.
  const Scenario back = parse_scenario(echo.dump());
  CHECK(scenario_json(back) == echo);
  CHECK(echo["configs"][4]["points"][3] == nlohmann::ordered_json::array({0.0, 3.0, 3.0, 0.0}));
}
