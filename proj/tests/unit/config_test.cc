#include "spcnn/config.hpp"

#include <gtest/gtest.h>

#include <fstream>

#include "spcnn/errors.hpp"
#include "support/temp_dir.hpp"

namespace spcnn {
namespace {

TEST(Config, PublishedDefaults) {
  const TrainConfig c;
  EXPECT_EQ(c.lambda, 5e-7);
  EXPECT_EQ(c.pool_window, 11u);
  EXPECT_EQ(c.prior_threshold, 0.2);
  EXPECT_EQ(c.weight_decay, 1e-5);
  EXPECT_EQ(c.lr_decay, 0.75);
  EXPECT_EQ(c.depth, 6u);
  EXPECT_EQ(c.shape_count, 64u);
  EXPECT_EQ(c.shape_size, 20u);
  EXPECT_EQ(c.patch, 40u);
  EXPECT_EQ(c.golden_radius, 6.0);
  EXPECT_EQ(c.prior().window, 11u);
  EXPECT_EQ(c.layers(), default_layers());
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, JsonRoundTrip) {
  TrainConfig c;
  c.lambda = 1e-6;
  c.width = 16;
  c.canny.sigma = 2.0;
  c.canny.relative_thresholds = false;
  c.seed = 12345678901234ull;
  const TrainConfig back = config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(back.seed, c.seed);
  EXPECT_FALSE(back.canny.relative_thresholds);
}

TEST(Config, PartialJsonKeepsBase) {
  TrainConfig base;
  base.epochs = 7;
  const TrainConfig c = config_from_json(nlohmann::json{{"lambda", 0.0}}, base);
  EXPECT_EQ(c.lambda, 0.0);
  EXPECT_EQ(c.epochs, 7u);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(config_from_json(nlohmann::json{{"lamda", 1.0}}), InvalidArgument);
  EXPECT_THROW(config_from_json(nlohmann::json{{"lambda", "x"}}), InvalidArgument);
  EXPECT_THROW(config_from_json(nlohmann::json{{"lambda", -1.0}}), InvalidArgument);
  EXPECT_THROW(config_from_json(nlohmann::json{{"pool_window", 10}}), InvalidArgument);
  EXPECT_THROW(config_from_json(nlohmann::json{{"prior_threshold", 1.5}}), InvalidArgument);
  EXPECT_THROW(config_from_json(nlohmann::json{{"canny_low", 0.5}}), InvalidArgument);
  EXPECT_THROW(config_from_json(nlohmann::json::array()), InvalidArgument);
}

TEST(Config, LoadFromFile) {
  testing::TempDir dir;
  std::ofstream(dir / "c.json") << R"({"batch_size": 4, "lr": 2e-5})";
  std::ofstream(dir / "bad.json") << "{ nope";
  const TrainConfig c = load_config(dir / "c.json");
  EXPECT_EQ(c.batch_size, 4u);
  EXPECT_EQ(c.lr, 2e-5);
  EXPECT_THROW(load_config(dir / "bad.json"), IoError);
  EXPECT_THROW(load_config(dir / "missing.json"), IoError);
}

}  // namespace
}  // namespace spcnn
