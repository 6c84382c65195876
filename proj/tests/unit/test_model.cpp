#include <cmath>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "cognate/model.hpp"
#include "cognate/training.hpp"
#include "model_props.hpp"

using namespace cognate;
using namespace testing_support;

TEST(ModelConfig, DefaultsAndValidation) {
  const ModelConfig c;
  EXPECT_EQ(c.hidden_size, 128);
  EXPECT_EQ(c.intermediate_size, 128);
  EXPECT_EQ(c.msa_layers, 2);
  EXPECT_EQ(c.pair_layers, 2);
  EXPECT_EQ(c.attention_heads, 2);
  EXPECT_EQ(c.vocab_size, 768);
  EXPECT_EQ(c.max_rows, 256);
  EXPECT_EQ(c.max_cols, 256);
  EXPECT_EQ(c.dropout, 0.1);
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(ModelConfig::from_json(c.to_json()), c);
  ModelConfig bad = c;
  bad.attention_heads = 3;  // does not divide 128
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = c;
  bad.dropout = 1.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad.dropout = 0.25;
  EXPECT_EQ(ModelConfig::from_json(bad.to_json()).dropout, 0.25);
}

TEST(Dropout, InvertedMaskSeededAndOffByDefault) {
  ag::Tape tape;
  const ParameterStore store = ParameterStore::initialize(toy_config(), 0);
  BoundParams plain(store, tape);
  std::vector<double> ones(4000, 1.0);
  ag::Var x = tape.leaf({4000}, ones);
  EXPECT_EQ(plain.dropout(x).id(), x.id());

  auto draw = [&](std::uint64_t seed) {
    BoundParams p(store, tape);
    p.enable_dropout(0.25, seed);
    const auto v = p.dropout(x).value();
    return std::vector<double>(v.begin(), v.end());
  };
  const auto a = draw(7);
  EXPECT_EQ(a, draw(7));
  EXPECT_NE(a, draw(8));
  int dropped = 0;
  for (double v : a) {
    EXPECT_TRUE(v == 0.0 || std::abs(v - 1.0 / 0.75) < 1e-12) << v;
    dropped += v == 0.0;
  }
  EXPECT_NEAR(dropped / 4000.0, 0.25, 0.03);
}

TEST(Dropout, InferenceIgnoresRate) {
  ModelConfig cfg = toy_config();
  const auto store = ParameterStore::initialize(cfg, 2);
  Rng rng(11);
  const auto grid = random_grid(4, 5, cfg, rng);
  const auto without = predict_links(grid, store, cfg);
  cfg.dropout = 0.5;
  EXPECT_EQ(predict_links(grid, store, cfg).p, without.p);
}

TEST(ParameterStore, DefaultSizeIsAboutOneMillion) {
  const auto store = ParameterStore::initialize(ModelConfig{}, 0);
  EXPECT_GT(store.parameter_count(), 900'000u);
  EXPECT_LT(store.parameter_count(), 1'200'000u);
  const auto layout = ParameterStore::layout(ModelConfig{});
  ASSERT_EQ(layout.size(), store.size());
  for (std::size_t i = 0; i < layout.size(); ++i) EXPECT_EQ(layout[i].first, store.entries()[i].name);
}

TEST(ParameterStore, InitializationIsSeeded) {
  const auto cfg = toy_config();
  EXPECT_EQ(ParameterStore::initialize(cfg, 4), ParameterStore::initialize(cfg, 4));
  EXPECT_FALSE(ParameterStore::initialize(cfg, 4) == ParameterStore::initialize(cfg, 5));
}

TEST(Forward, ShapesAndProbabilityContract) {
  const auto cfg = toy_config();
  const auto params = ParameterStore::initialize(cfg, 1);
  Rng rng(2);
  const TokenGrid g = random_grid(5, 4, cfg, rng);
  ag::Tape tape;
  BoundParams bound(params, tape);
  const auto out = forward(g, bound, cfg);
  EXPECT_EQ(out.logits.shape(), (ag::Shape{5, 5, 2}));
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(out.probabilities.at(i, i), 1.0);
    for (int j = 0; j < 5; ++j) {
      EXPECT_GE(out.probabilities.at(i, j), 0.0);
      EXPECT_LE(out.probabilities.at(i, j), 1.0);
    }
  }
  const TokenGrid empty;
  EXPECT_EQ(predict_links(empty, params, cfg).rows, 0);
}

TEST(Forward, PaddingDoesNotMoveRealPairs) {
  const auto cfg = toy_config();
  const auto params = ParameterStore::initialize(cfg, 3);
  Rng rng(4);
  for (int n = 0; n < 20; ++n) {
    const TokenGrid g = random_grid(1 + rng.below(5), 1 + rng.below(5), cfg, rng);
    EXPECT_LE(mask_drift(g, params, cfg, rng), 1e-6);
  }
}

TEST(Forward, RowPermutationEquivariant) {
  const auto cfg = toy_config();
  const auto params = ParameterStore::initialize(cfg, 5);
  Rng rng(6);
  for (int n = 0; n < 20; ++n) {
    const TokenGrid g = random_grid(2 + rng.below(5), 1 + rng.below(5), cfg, rng);
    EXPECT_LE(permutation_error(g, params, cfg, rng), 1e-5);
  }
}

TEST(Forward, ProbabilitiesExactlySymmetric) {
  const auto cfg = toy_config();
  const auto params = ParameterStore::initialize(cfg, 7);
  Rng rng(8);
  for (int n = 0; n < 20; ++n)
    EXPECT_TRUE(exactly_symmetric(predict_links(random_grid(1 + rng.below(6), 1 + rng.below(5), cfg, rng), params, cfg)));
}

TEST(Forward, GradientsMatchFiniteDifferences) {
  const auto cfg = toy_config();
  const auto params = ParameterStore::initialize(cfg, 9);
  Rng rng(10);
  const TokenGrid g = random_grid(3, 4, cfg, rng);
  const auto targets = link_targets({"1", "1", "2"});
  const auto check = check_link_loss_gradients(g, targets, params, cfg);
  EXPECT_EQ(check.parameters, params.parameter_count());
  EXPECT_LE(check.max_relative_error, 1e-4) << "worst tensor " << check.worst;
}
