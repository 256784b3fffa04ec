#include <doctest.h>

#include <stdexcept>

#include "onlineboot/config.hpp"

using namespace onlineboot;

TEST_CASE("parse_config_text") {
  const auto kv = parse_config_text(
      "# leading comment\n"
      "reps = 10\n"
      "[experiment]\n"
      "methods = ar, iid   # trailing comment\n"
      "\n"
      "[scenario]\n"
      "tag = ma20\n");
  CHECK(kv.at("experiment.reps") == "10");
  CHECK(kv.at("experiment.methods") == "ar, iid");
  CHECK(kv.at("scenario.tag") == "ma20");
  CHECK(kv.size() == 3);

  CHECK_THROWS_WITH_AS(parse_config_text("reps = 1\nnonsense\n"), "line 2: expected 'key = value'", ConfigError);
  CHECK_THROWS_AS(parse_config_text("[broken\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text(" = 3\n"), ConfigError);
}

TEST_CASE("apply_config") {
  ExperimentConfig c;
  apply_config(c, parse_config_text("methods = block,ar\nn = 100, 200\nseed = 9\n"
                                    "[scenario]\nthetas = 0.1\ntag = ma2\n"
                                    "[garch]\nalpha1 = 0.2\n"));
  CHECK(c.methods == std::vector<Method>{Method::block, Method::ar});
  CHECK(c.checkpoints == std::vector<std::size_t>{100, 200});
  CHECK(c.master_seed == 9);
  // The tag resets defaults first; explicit keys then override regardless of order.
  CHECK(c.scenario.tag == ScenarioTag::ma2);
  CHECK(c.scenario.ma.thetas == std::vector<double>{0.1});
  CHECK(c.scenario.garch.alpha1 == 0.2);

  ExperimentConfig d;
  CHECK_THROWS_WITH_AS(apply_config(d, parse_config_text("colour = blue\n")),
                       "unknown config key 'experiment.colour'", ConfigError);
  CHECK_THROWS_AS(apply_config(d, parse_config_text("reps = -3\n")), ConfigError);
  CHECK_THROWS_AS(apply_config(d, parse_config_text("beta = abc\n")), ConfigError);
  CHECK_THROWS_AS(apply_config(d, parse_config_text("methods = ar,bogus\n")), ConfigError);
  CHECK_THROWS_AS(apply_config(d, parse_config_text("[scenario]\ntag = nope\n")), ConfigError);
  CHECK_THROWS_AS(apply_config(d, parse_config_text("timing = maybe\n")), ConfigError);
}

TEST_CASE("describe() loads back to the same configuration") {
  ExperimentConfig c;
  c.scenario = make_scenario(ScenarioTag::ma2garch);
  c.scenario.garch.beta1 = 0.55;
  c.methods = {Method::iid, Method::block};
  c.checkpoints = {10, 20, 40};
  c.beta = 0.3;
  c.level = 0.8;
  c.master_seed = 123456789012345ULL;
  c.record_timing = true;

  ExperimentConfig back;
  apply_config(back, parse_config_text(c.describe()));
  CHECK(back.describe() == c.describe());
  CHECK(back.hash() == c.hash());

  ExperimentConfig other = c;
  other.reps += 1;
  CHECK(other.hash() != c.hash());
}

TEST_CASE("ExperimentConfig::validate names the field") {
  ExperimentConfig c;
  CHECK_NOTHROW(c.validate());
  c.beta = 0.5;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("beta"), std::invalid_argument);
  c = {};
  c.checkpoints = {100, 50};
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("n:"), std::invalid_argument);
  c = {};
  c.level = 1.0;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("level"), std::invalid_argument);
  c = {};
  c.methods.clear();
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("methods"), std::invalid_argument);
}
