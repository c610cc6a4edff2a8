#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <variant>

#include "sbstein/chains.hpp"
#include "sbstein/config.hpp"

using namespace sbstein;

TEST_CASE("chain configs load for every family", "[config]") {
  auto srw = load_chain(R"({"family": "reflected_srw", "params": {"p": 0.75}})");
  REQUIRE(std::get<ReflectedSRW>(srw.family()).p == 0.75);

  auto mm1 = load_chain(R"({"family": "mm1_embedded", "params": {"rho": 0.5}})");
  REQUIRE(std::get<MM1Embedded>(mm1.family()).rho == 0.5);

  auto bd = load_chain(
      R"({"family": "birth_death", "params": {"b": [0.25], "d": [0, 0.75]}})");
  REQUIRE(bd.birth_prob(3) == 0.25);
  REQUIRE(death_prob(bd, 3) == 0.75);

  auto ex = load_chain(
      R"({"family": "explicit",
          "params": {"rows": [[0.5, 0.5], [0.75, 0.25]]}})");
  REQUIRE(ex.state_count().value() == 2);
  REQUIRE(ex.row(1, 2)[0] == 0.75);
}

TEST_CASE("descriptions pass through", "[config]") {
  auto c = load_chain(
      R"({"family": "reflected_srw", "params": {"p": 0.6},
          "description": "walk for the docs"})");
  REQUIRE(c.description() == "walk for the docs");
}

TEST_CASE("out-of-range parameters are rejected with a line anchor", "[config]") {
  const std::string text = "{\n"
                           "  \"family\": \"reflected_srw\",\n"
                           "  \"params\": {\"p\": 0.4}\n"
                           "}\n";
  REQUIRE_THROWS_AS(load_chain(text), InvalidParameter);
  try {
    load_chain(text);
    FAIL("expected a rejection");
  } catch (const ConfigError& e) {
    REQUIRE(e.line == 3);
    REQUIRE(std::string(e.what()).find("p must lie in (1/2, 1)") != std::string::npos);
  }
}

TEST_CASE("broken json is rejected with the failing line", "[config]") {
  const std::string text = "{\n  \"family\": \"reflected_srw\",\n  oops\n}\n";
  try {
    load_chain(text);
    FAIL("expected a rejection");
  } catch (const ConfigError& e) {
    REQUIRE(e.line == 3);
  }
}

TEST_CASE("structural config mistakes are rejected", "[config]") {
  REQUIRE_THROWS_AS(load_chain(R"([1, 2, 3])"), ConfigError);
  REQUIRE_THROWS_AS(load_chain(R"({"params": {"p": 0.75}})"), ConfigError);
  REQUIRE_THROWS_AS(load_chain(R"({"family": "reflected_srw"})"), ConfigError);
  REQUIRE_THROWS_AS(load_chain(R"({"family": "zebra", "params": {}})"), ConfigError);
  REQUIRE_THROWS_AS(load_chain(R"({"family": "mm1_embedded", "params": {}})"),
                    ConfigError);
  REQUIRE_THROWS_AS(
      load_chain(R"({"family": "birth_death", "params": {"b": 0.25, "d": [0]}})"),
      ConfigError);
  REQUIRE_THROWS_AS(
      load_chain(R"({"family": "explicit", "params": {"rows": [[0.5, "x"]]}})"),
      ConfigError);
}

TEST_CASE("chain configs load from files", "[config]") {
  const auto path = std::filesystem::temp_directory_path() / "sbstein_cfg_test.json";
  {
    std::ofstream out(path);
    out << R"({"family": "mm1_embedded", "params": {"rho": 0.8}})";
  }
  auto c = load_chain_file(path.string());
  REQUIRE(std::get<MM1Embedded>(c.family()).rho == 0.8);
  std::filesystem::remove(path);
  REQUIRE_THROWS_AS(load_chain_file(path.string()), ConfigError);
}

TEST_CASE("test functions load from sparse values", "[config]") {
  auto h = load_test_function(
      R"({"values": {"0": 1.0, "3": -0.5}, "default": 0.25, "bound": 1.0})");
  REQUIRE(h.values.size() == 4);
  REQUIRE(h(0) == 1.0);
  REQUIRE(h(1) == 0.25);
  REQUIRE(h(3) == -0.5);
  REQUIRE(h(100) == 0.25);
  REQUIRE(h.bound == 1.0);
}

TEST_CASE("test function loader rejects bad keys and bound violations", "[config]") {
  REQUIRE_THROWS_AS(load_test_function(R"({"values": {"x1": 1.0}})"), ConfigError);
  REQUIRE_THROWS_AS(load_test_function(R"({"values": {"-2": 1.0}})"), ConfigError);
  REQUIRE_THROWS_AS(load_test_function(R"({"values": {"0": [1]}})"), ConfigError);
  REQUIRE_THROWS_AS(
      load_test_function(R"({"values": {"0": 2.0}, "bound": 1.0})"), ConfigError);
  REQUIRE_THROWS_AS(load_test_function(R"({"default": 0.0})"), ConfigError);
}
