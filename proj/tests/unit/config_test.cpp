#include <gtest/gtest.h>

#include "causalrec/config.hpp"
#include "causalrec/error.hpp"

using namespace causalrec;

TEST(Config, DefaultsFollowTheExperimentProtocol) {
  const RunConfig c = config_from_json("{}");
  EXPECT_EQ(c.simulation.n_users, 10000);
  EXPECT_EQ(c.simulation.traj_len, 15);
  EXPECT_EQ(c.simulation.p_int, 0.3);
  EXPECT_EQ(c.simulation.slate_size, 10);
  EXPECT_EQ(c.training.learning_rate, 1e-3);
  EXPECT_EQ(c.training.l2, 1e-6);
  EXPECT_EQ(c.training.eta, 2.0);
  EXPECT_EQ(c.training.delta, 0.9);
  EXPECT_EQ(c.training.h_tolerance, 1e-8);
  EXPECT_EQ(c.training.max_outer, 25);
  EXPECT_EQ(c.evaluation.negatives, 100);
}

TEST(Config, RoundTrip) {
  RunConfig c;
  c.simulation.d = 12;
  c.simulation.p_keep = 0.25;
  c.model.variant = EquationVariant::kLinear;
  c.model.indexing = ExpertIndexing::kLastEvent;
  c.model.coupled_r = true;
  c.model.negatives = -1;
  c.training.seed = 12345678901234ull;
  c.training.sparsity = 0.02;
  c.evaluation.threshold = 0.7;
  c.paths.data = "some/where.tsv";
  const RunConfig back = config_from_json(config_to_json(c));
  EXPECT_TRUE(back == c);
  EXPECT_EQ(back.model.variant, EquationVariant::kLinear);
  EXPECT_EQ(back.training.seed, 12345678901234ull);
  EXPECT_EQ(back.paths.data, "some/where.tsv");
}

TEST(Config, PartialSectionsKeepDefaults) {
  const RunConfig c = config_from_json(R"({"training": {"max_epochs": 3}})");
  EXPECT_EQ(c.training.max_epochs, 3);
  EXPECT_EQ(c.training.batch_size, RunConfig{}.training.batch_size);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(config_from_json(R"({"simulations": {}})"), InputError);
  EXPECT_THROW(config_from_json(R"({"model": {"hidden": 3}})"), InputError);
  EXPECT_THROW(config_from_json(R"({"model": {"variant": "cubic"}})"), InputError);
  EXPECT_THROW(config_from_json(R"({"training": {"max_outer": "many"}})"), InputError);
  EXPECT_THROW(config_from_json(R"({"simulation": {"p_int": 2}})"), InputError);
  EXPECT_THROW(config_from_json(R"({"simulation": {"d": 5, "slate_size": 6}})"), InputError);
  EXPECT_THROW(config_from_json(R"({"model": {"disable_rs": true, "disable_cm": true}})"), InputError);
  EXPECT_THROW(config_from_json(R"({"evaluation": {"threshold": 1.0}})"), InputError);
  EXPECT_THROW(config_from_json("[1, 2]"), InputError);
  EXPECT_THROW(config_from_json("{not json"), InputError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), InputError);
}

TEST(Config, DerivedOptions) {
  RunConfig c;
  c.model.disable_rs = true;
  EXPECT_EQ(expert_mode(c.model), ExpertMode::kCausalOnly);
  c.model.disable_rs = false;
  c.model.disable_cm = true;
  EXPECT_EQ(expert_mode(c.model), ExpertMode::kRsOnly);
  c.model.disable_cm = false;
  c.model.coupled_r = true;
  EXPECT_EQ(expert_mode(c.model), ExpertMode::kCoupled);

  c.training.gamma_learning_rate = 0.05;
  const auto t = train_options(c);
  EXPECT_EQ(t.rmsprop.learning_rate_overrides.at("gamma"), 0.05);
  EXPECT_EQ(t.objective.score.expert, ExpertMode::kCoupled);
  EXPECT_EQ(t.max_outer, c.training.max_outer);
  const auto shape = model_shape(c, 7);
  EXPECT_EQ(shape.d, 7);
  EXPECT_EQ(shape.window, c.model.window);
}
