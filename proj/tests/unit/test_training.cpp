#include <cmath>

#include <gtest/gtest.h>

#include "cognate/checkpoint.hpp"
#include "cognate/pipeline.hpp"
#include "cognate/synthetic.hpp"
#include "cognate/training.hpp"
#include "model_props.hpp"

using namespace cognate;
using testing_support::random_grid;
using testing_support::toy_config;

namespace {

Wordlist small_wordlist(const std::vector<std::tuple<std::string, std::string, std::string, std::string>>& rows) {
  Wordlist wl;
  std::int64_t id = 1;
  for (const auto& [family, concept_name, tokens, cogid] : rows) {
    WordRecord r;
    r.id = id;
    r.family = family;
    r.language = "L" + std::to_string(id++);
    r.concept_name = concept_name;
    r.tokens = parse_word(tokens);
    r.cogid = cogid;
    wl.rows.push_back(r);
  }
  return wl;
}

LinkProbabilities gold_probabilities(const std::vector<std::string>& ids) {
  LinkProbabilities p;
  p.rows = static_cast<int>(ids.size());
  for (const auto& a : ids)
    for (const auto& b : ids) p.p.push_back(a == b ? 1.0 : 0.0);
  return p;
}

}  // namespace

TEST(LinkTargets, Examples) {
  const auto t = link_targets({"1", "1", "2"});
  const std::vector<std::int8_t> expect{kIgnoreLink, 1, 0, 1, kIgnoreLink, 0, 0, 0, kIgnoreLink};
  EXPECT_EQ(t.l, expect);
  const auto distinct = link_targets({"a", "b", "c"});
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) EXPECT_EQ(distinct.at(i, j), 0);
  // Vedic, Russian, Czech | Sanskrit, Greek.
  const auto all = link_targets({"v", "s", "v", "v", "s"});
  EXPECT_EQ(all.at(0, 2), 1);
  EXPECT_EQ(all.at(2, 3), 1);
  EXPECT_EQ(all.at(1, 4), 1);
  EXPECT_EQ(all.at(0, 1), 0);
  EXPECT_EQ(all.at(3, 4), 0);
  const auto masked = link_targets({"1", "1", "1"}, {1, 1, 0});
  EXPECT_EQ(masked.at(0, 1), 1);
  EXPECT_EQ(masked.at(0, 2), kIgnoreLink);
  EXPECT_EQ(masked.at(2, 1), kIgnoreLink);
}

TEST(LinkTargets, SymmetricAndTransitive) {
  Rng rng(1);
  for (int n = 0; n < 100; ++n) {
    const std::size_t r = 1 + rng.below(7);
    std::vector<std::string> ids(r);
    for (auto& s : ids) s = std::to_string(rng.below(3));
    const auto t = link_targets(ids);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < r; ++j) {
        EXPECT_EQ(t.at(i, j), t.at(j, i));
        for (std::size_t k = 0; k < r; ++k)
          if (t.at(i, j) == 1 && t.at(j, k) == 1 && i != k) EXPECT_EQ(t.at(i, k), 1);
      }
  }
}

TEST(LinkLoss, UniformLogitsGiveLn2AndIgnoredGivesZero) {
  ag::Tape tape;
  ag::Var logits = tape.leaf({3, 3, 2}, std::vector<double>(18, 0.25));
  EXPECT_NEAR(link_loss(logits, link_targets({"1", "1", "2"})).item(), std::log(2.0), 1e-12);
  ag::Var single = tape.leaf({1, 1, 2}, std::vector<double>{0.3, -1.0});
  ag::Var zero = link_loss(single, link_targets({"1"}));
  EXPECT_EQ(zero.item(), 0.0);
  tape.backward(zero);
  for (double g : single.grad()) EXPECT_EQ(g, 0.0);
}

TEST(LinkLoss, HandComputedThreeByThree) {
  // Logit pairs (l0, l1) per ordered pair; targets from ids [1,1,2].
  std::vector<double> v(18, 0.0);
  auto set = [&](int i, int j, double l0, double l1) {
    v[(i * 3 + j) * 2] = l0;
    v[(i * 3 + j) * 2 + 1] = l1;
  };
  set(0, 1, 0.0, 2.0);  // target 1
  set(1, 0, 1.0, 0.0);  // target 1
  set(0, 2, 3.0, 0.0);  // target 0
  set(2, 0, 0.0, 0.0);  // target 0
  set(1, 2, 0.0, 1.0);  // target 0
  set(2, 1, 2.0, 1.0);  // target 0
  auto ce = [](double l0, double l1, int y) {
    const double m = std::max(l0, l1);
    const double lse = m + std::log(std::exp(l0 - m) + std::exp(l1 - m));
    return lse - (y ? l1 : l0);
  };
  const double expect =
      (ce(0, 2, 1) + ce(1, 0, 1) + ce(3, 0, 0) + ce(0, 0, 0) + ce(0, 1, 0) + ce(2, 1, 0)) / 6.0;
  ag::Tape tape;
  EXPECT_NEAR(link_loss(tape.leaf({3, 3, 2}, v), link_targets({"1", "1", "2"})).item(), expect, 1e-12);
}

TEST(LinkLoss, InvariantUnderJointRowPermutation) {
  Rng rng(2);
  std::vector<double> v(4 * 4 * 2);
  for (auto& x : v) x = rng.normal();
  const std::vector<std::string> ids{"a", "b", "a", "c"};
  const std::vector<int> perm{2, 0, 3, 1};
  std::vector<double> pv(v.size());
  std::vector<std::string> pids(4);
  for (int i = 0; i < 4; ++i) {
    pids[i] = ids[perm[i]];
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 2; ++k) pv[(i * 4 + j) * 2 + k] = v[(perm[i] * 4 + perm[j]) * 2 + k];
  }
  ag::Tape tape;
  EXPECT_NEAR(link_loss(tape.leaf({4, 4, 2}, v), link_targets(ids)).item(),
              link_loss(tape.leaf({4, 4, 2}, pv), link_targets(pids)).item(), 1e-12);
}

TEST(AdamW, SingleStepAndDescent) {
  TrainConfig cfg;
  ParameterStore p;
  p.add("w", {1}, {1.0});
  AdamState s;
  adamw_step(p, {{1.0}}, s, cfg);
  EXPECT_NEAR(p.at("w").data[0], 0.99899, 1e-9);

  TrainConfig no_decay = cfg;
  no_decay.weight_decay = 0.0;
  ParameterStore q;
  q.add("w", {2}, {0.5, -2.0});
  AdamState sq;
  adamw_step(q, {{0.0, 0.0}}, sq, no_decay);
  EXPECT_EQ(q.at("w").data, (std::vector<double>{0.5, -2.0}));

  ParameterStore f;
  f.add("w", {1}, {3.0});
  AdamState sf;
  double before = 9.0;
  for (int k = 0; k < 2; ++k) {
    adamw_step(f, {{2 * f.at("w").data[0]}}, sf, cfg);
    const double now = f.at("w").data[0] * f.at("w").data[0];
    EXPECT_LT(now, before);
    before = now;
  }
  EXPECT_THROW(adamw_step(f, {{1.0, 2.0}}, sf, cfg), std::invalid_argument);
}

TEST(MakeBatches, PadsToLargestAndIsSeeded) {
  const auto cfg = toy_config();
  Rng rng(3);
  std::vector<Example> ex;
  ex.push_back({random_grid(3, 5, cfg, rng), link_targets({"1", "1", "2"}), 0});
  ex.push_back({random_grid(2, 7, cfg, rng), link_targets({"1", "2"}), 1});
  const auto batches = make_batches(ex, 4, 9, cfg);
  ASSERT_EQ(batches.size(), 1u);
  EXPECT_EQ(batches[0].items.size(), 2u);
  EXPECT_EQ(batches[0].rows, 3);
  EXPECT_EQ(batches[0].cols, 8);
  for (const auto& item : batches[0].items) {
    EXPECT_EQ(item.tokens.rows, 3u);
    EXPECT_EQ(item.tokens.cols, 8u);
    EXPECT_EQ(item.targets.rows, 3);
  }
  const auto& two = batches[0].items[0].source == 1 ? batches[0].items[0] : batches[0].items[1];
  EXPECT_EQ(two.tokens.at(2, 0), Vocabulary::kPad);
  EXPECT_EQ(two.targets.at(0, 2), kIgnoreLink);

  EXPECT_TRUE(make_batches({}, 4, 1, cfg).empty());
  std::vector<Example> many;
  for (std::size_t k = 0; k < 9; ++k) many.push_back({random_grid(2, 2, cfg, rng), link_targets({"1", "2"}), k});
  auto sources = [](const std::vector<Batch>& bs) {
    std::vector<std::size_t> s;
    for (const auto& b : bs)
      for (const auto& it : b.items) s.push_back(it.source);
    return s;
  };
  const auto a = make_batches(many, 4, 5, cfg), b = make_batches(many, 4, 5, cfg);
  EXPECT_EQ(a.size(), 3u);
  EXPECT_EQ(sources(a), sources(b));
  auto sorted = sources(a);
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t k = 0; k < 9; ++k) EXPECT_EQ(sorted[k], k);
}

TEST(MakeBatches, OversizedConceptsAreCutWithWarnings) {
  auto cfg = toy_config();
  cfg.max_rows = 2;
  cfg.max_cols = 3;
  Rng rng(4);
  std::vector<Example> ex{{random_grid(4, 6, cfg, rng), link_targets({"1", "1", "2", "2"}), 0}};
  Warnings w;
  const auto b = make_batches(ex, 1, 1, cfg, &w);
  EXPECT_EQ(b[0].rows, 2);
  EXPECT_EQ(b[0].cols, 3);
  EXPECT_EQ(w.size(), 2u);
}

TEST(ValidationSplit, PerFamilyCeilingWithMinimumOne) {
  std::vector<AlignedConcept> concepts;
  for (int k = 0; k < 30; ++k) concepts.push_back({"A", "c" + std::to_string(k), {}, {}, {}, {}, {}});
  for (int k = 0; k < 3; ++k) concepts.push_back({"B", "c" + std::to_string(k), {}, {}, {}, {}, {}});
  concepts.push_back({"C", "only", {}, {}, {}, {}, {}});
  const auto flags = validation_split(concepts, 0.05, 7);
  int a = 0, b = 0, c = 0;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (!flags[i]) continue;
    (concepts[i].family == "A" ? a : concepts[i].family == "B" ? b : c)++;
  }
  EXPECT_EQ(a, 2);  // ceil(1.5)
  EXPECT_EQ(b, 1);
  EXPECT_EQ(c, 0);
  EXPECT_EQ(validation_split(concepts, 0.05, 7), flags);
}

TEST(SweepThreshold, TiesGoToLowestThreshold) {
  const Wordlist wl = small_wordlist({{"A", "c", "p a t", "1"}, {"A", "c", "p a d", "1"}, {"A", "c", "m i", "2"}});
  const auto concepts = align_concepts(wl, ScoringScheme::sca_default(), 1);
  const auto choice = sweep_threshold(wl, concepts, {gold_probabilities(concepts[0].cogids)}, TrainConfig{});
  EXPECT_EQ(choice.threshold, 0.30);
  EXPECT_EQ(choice.validation_score, 1.0);
}

TEST(Train, ZeroEpochsReturnsInitialParameters) {
  const Wordlist wl = small_wordlist({{"A", "c1", "p a t", "1"}, {"A", "c1", "p a d", "1"}, {"A", "c2", "m i", "1"},
                                      {"A", "c2", "k u", "2"}});
  TrainConfig tc;
  tc.epochs = 0;
  tc.seed = 4;
  const auto cfg = toy_config();
  const auto r = train(wl, tc, cfg);
  auto init = ParameterStore::initialize(cfg, 4);
  round_to_float32(init);
  EXPECT_EQ(r.params, init);
  EXPECT_GT(r.threshold.threshold, 0.0);
  EXPECT_TRUE(r.history.empty());
  EXPECT_THROW(train(Wordlist{}, tc, cfg), std::invalid_argument);
}

TEST(Train, DeterministicAcrossRuns) {
  SyntheticSpec spec;
  spec.concepts = 6;
  spec.test_concepts = 0;
  spec.languages = 4;
  const auto data = make_synthetic(spec);
  TrainConfig tc;
  tc.epochs = 2;
  tc.seed = 3;
  const auto cfg = toy_config();
  const auto a = train(data.train, tc, cfg, data.languages);
  const auto b = train(data.train, tc, cfg, data.languages);
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.threshold.validation_score, b.threshold.validation_score);
  EXPECT_EQ(a.history.size(), 2u);
}

TEST(TrainStep, DropoutIsIndependentOfWorkerCount) {
  ModelConfig cfg = toy_config();
  cfg.dropout = 0.2;
  Rng rng(5);
  std::vector<Example> examples;
  for (int k = 0; k < 4; ++k) {
    const std::size_t rows = 3 + k % 2;
    std::vector<std::string> ids(rows, "a");
    ids.back() = "b";
    examples.push_back({random_grid(rows, 4, cfg, rng), link_targets(ids), 0});
  }
  const Batch batch = make_batches(examples, 4, 1, cfg).front();
  auto run = [&](unsigned workers, double rate) {
    ModelConfig m = cfg;
    m.dropout = rate;
    ParameterStore params = ParameterStore::initialize(m, 0);
    AdamState state;
    TrainConfig tc;
    tc.workers = workers;
    const double loss = train_step(params, state, batch, m, tc).loss;
    return std::make_pair(loss, params);
  };
  const auto one = run(1, 0.2);
  const auto three = run(3, 0.2);
  EXPECT_EQ(one.first, three.first);
  EXPECT_EQ(one.second, three.second);
  EXPECT_NE(one.first, run(1, 0.0).first);
}

TEST(Train, OverfitsOneFourWordConcept) {
  const Wordlist wl = small_wordlist({{"A", "c", "p a t e r", "1"}, {"A", "c", "f a d a r", "1"},
                                      {"A", "c", "m u t", "2"}, {"A", "c", "m o d", "2"}});
  const auto concepts = align_concepts(wl, ScoringScheme::sca_default(), 1);
  const ModelConfig cfg;
  const Vocabulary vocab = build_vocabulary(concepts, {}, static_cast<std::size_t>(cfg.vocab_size));
  Batch batch;
  batch.items.push_back({tokenize(concepts[0], vocab), link_targets(concepts[0].cogids), 0});
  batch.rows = static_cast<int>(batch.items[0].tokens.rows);
  batch.cols = static_cast<int>(batch.items[0].tokens.cols);
  ParameterStore params = ParameterStore::initialize(cfg, 0);
  AdamState state;
  TrainConfig tc;
  double loss = 1.0;
  int steps = 0;
  while (steps < 200 && loss >= 0.01) {
    loss = train_step(params, state, batch, cfg, tc).loss;
    ++steps;
  }
  EXPECT_LT(loss, 0.01) << "after " << steps << " steps";
}
