#include <gtest/gtest.h>

#include "graphtrack/config.hpp"
#include "graphtrack/errors.hpp"

using namespace graphtrack;

TEST(RunConfig, DefaultsRoundTrip) {
  const RunConfig cfg;
  EXPECT_EQ(parse_run_config(run_config_json(cfg)), cfg);
  EXPECT_EQ(parse_run_config("{}"), cfg);
}

TEST(RunConfig, ChangedValuesRoundTrip) {
  RunConfig cfg;
  cfg.seed = 42;
  cfg.image = {640, 480};
  cfg.tracker.graph.tau_dist = 0.3;
  cfg.tracker.graph.weight.use_velocity = false;
  cfg.tracker.use_temporal = false;
  cfg.tracker.tau_gate = 0.08;
  cfg.train.lr = 0.01;
  cfg.train.halve_on_plateau = true;
  cfg.explain.mask = MaskMode::Mean;
  EXPECT_EQ(parse_run_config(run_config_json(cfg)), cfg);
}

TEST(RunConfig, PartialFileKeepsDefaults) {
  const auto cfg = parse_run_config(R"({"graph":{"tau_dist":0.5},"seed":3})");
  EXPECT_EQ(cfg.tracker.graph.tau_dist, 0.5);
  EXPECT_EQ(cfg.tracker.graph.tau_vel, 0.05);
  EXPECT_EQ(cfg.seed, 3u);
  EXPECT_EQ(cfg.tracker_config().seed, 3u);
}

TEST(RunConfig, UnknownKeysNamed) {
  try {
    parse_run_config(R"({"graph":{"tau_distance":0.5}})");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("graph.tau_distance"), std::string::npos);
  }
  EXPECT_THROW(parse_run_config(R"({"colour":1})"), ConfigError);
}

TEST(RunConfig, InvalidValuesRejected) {
  EXPECT_THROW(parse_run_config("{"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"graph":{"tau_dist":"far"}})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"train":{"momentum":1.5}})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"image":{"width":0}})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"detect":{"roi":[0,0,1]}})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"graph":{"edge_gate":"xor"}})"), ConfigError);
}
