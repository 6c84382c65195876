#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "cognate/diagnostics.hpp"
#include "cognate/evaluation.hpp"
#include "cognate/rng.hpp"
#include "oracles.hpp"

using namespace cognate;
using testing_support::brute_force_bcubed;

namespace {

std::vector<std::string> random_labels(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::string> v(n);
  for (auto& s : v) s = "c" + std::to_string(rng.below(k));
  return v;
}

Wordlist make_wordlist(const std::vector<std::tuple<std::string, std::string, std::string>>& rows) {
  Wordlist wl;
  std::int64_t id = 1;
  for (const auto& [family, concept_name, cogid] : rows) {
    WordRecord r;
    r.id = id++;
    r.family = family;
    r.language = "L" + std::to_string(r.id);
    r.concept_name = concept_name;
    r.tokens = parse_word("p a");
    r.cogid = cogid;
    wl.rows.push_back(r);
  }
  return wl;
}

}  // namespace

TEST(BCubed, HandDerivedCases) {
  const auto merged = bcubed({"x", "x", "y"}, {"1", "1", "1"});
  EXPECT_NEAR(merged.precision, 5.0 / 9, 1e-9);
  EXPECT_NEAR(merged.recall, 1.0, 1e-9);
  EXPECT_NEAR(merged.f1, 5.0 / 7, 1e-9);
  const auto split = bcubed({"x", "x", "y"}, {"1", "2", "3"});
  EXPECT_NEAR(split.precision, 1.0, 1e-9);
  EXPECT_NEAR(split.recall, 2.0 / 3, 1e-9);
  EXPECT_NEAR(split.f1, 0.8, 1e-9);
  const auto same = bcubed({"a", "b", "b"}, {"q", "r", "r"});
  EXPECT_EQ(same.f1, 1.0);
  EXPECT_THROW(bcubed({}, {}), std::invalid_argument);
  EXPECT_THROW(bcubed({"a"}, {"a", "b"}), std::invalid_argument);
}

TEST(BCubed, MatchesBruteForceOracle) {
  Rng rng(31);
  for (int n = 0; n < 300; ++n) {
    const std::size_t items = 1 + rng.below(12);
    const auto gold = random_labels(items, 1 + rng.below(5), rng);
    const auto pred = random_labels(items, 1 + rng.below(5), rng);
    const auto got = bcubed(gold, pred);
    const auto want = brute_force_bcubed(gold, pred);
    EXPECT_NEAR(got.precision, want.precision, 1e-9);
    EXPECT_NEAR(got.recall, want.recall, 1e-9);
    EXPECT_NEAR(got.f1, want.f1, 1e-9);
  }
}

TEST(BCubed, RelabelSwapAndMergeProperties) {
  Rng rng(32);
  for (int n = 0; n < 200; ++n) {
    const std::size_t items = 1 + rng.below(10);
    const auto gold = random_labels(items, 3, rng);
    const auto pred = random_labels(items, 4, rng);
    auto relabeled = pred;
    for (auto& s : relabeled) s = "z" + s;
    EXPECT_EQ(bcubed(gold, pred).f1, bcubed(gold, relabeled).f1);
    const auto ab = bcubed(gold, pred), ba = bcubed(pred, gold);
    EXPECT_EQ(ab.precision, ba.recall);
    EXPECT_EQ(ab.recall, ba.precision);
    auto gold_relabeled = gold;
    for (auto& g : gold_relabeled) g += "'";
    EXPECT_DOUBLE_EQ(bcubed(gold, gold_relabeled).f1, 1.0);

    // Splitting each gold class into two predicted halves, then merging them
    // back, never lowers recall.
    std::vector<std::string> halves(items);
    for (std::size_t i = 0; i < items; ++i) halves[i] = gold[i] + (i % 2 ? "a" : "b");
    EXPECT_GE(bcubed(gold, gold).recall, bcubed(gold, halves).recall);
  }
}

TEST(Evaluate, PerFamilyMeanAndOrder) {
  // Southern: perfect. Northern: gold {x,x,y} predicted as one cluster.
  const Wordlist gold = make_wordlist({{"Southern", "c1", "1"}, {"Southern", "c1", "2"}, {"Northern", "c1", "x"},
                                       {"Northern", "c1", "x"}, {"Northern", "c1", "y"}});
  Wordlist pred = gold;
  const auto col = pred.ensure_extra_column(kPredictedColumn);
  const std::vector<std::string> labels{"a", "b", "m", "m", "m"};
  for (std::size_t i = 0; i < 5; ++i) pred.rows[i].extra[col] = labels[i];
  const auto report = evaluate_dataset(gold, pred);
  ASSERT_EQ(report.families.size(), 2u);
  EXPECT_EQ(report.families[0].family, "Southern");
  EXPECT_EQ(report.families[1].family, "Northern");
  EXPECT_DOUBLE_EQ(report.families[0].score.f1, 1.0);
  EXPECT_NEAR(report.families[1].score.f1, 5.0 / 7, 1e-12);
  EXPECT_NEAR(report.mean.f1, (1.0 + 5.0 / 7) / 2, 1e-12);
  EXPECT_EQ(report.to_json()["mean"]["f1"].get<double>(), report.mean.f1);
  EXPECT_NE(report.to_table().find("Northern"), std::string::npos);
}

TEST(Evaluate, MeanOfTwoFamilies) {
  const Wordlist one = make_wordlist({{"A", "c", "x"}, {"A", "c", "x"}, {"A", "c", "y"}});
  const auto single = evaluate_labels(one, {"1", "2", "3"});
  EXPECT_NEAR(single.mean.f1, 0.8, 1e-12);
  EXPECT_EQ(single.mean.f1, single.families[0].score.f1);

  // Family B: gold {0,0,0,1} predicted as {0,1,2,0}, F = 0.6.
  const Wordlist two = make_wordlist({{"A", "c", "x"}, {"A", "c", "x"}, {"A", "c", "y"}, {"B", "c", "0"},
                                      {"B", "c", "0"}, {"B", "c", "0"}, {"B", "c", "1"}});
  const auto rep = evaluate_labels(two, {"1", "2", "3", "0", "1", "2", "0"});
  EXPECT_NEAR(rep.families[0].score.f1, 0.8, 1e-12);
  EXPECT_NEAR(rep.families[1].score.f1, 0.6, 1e-12);
  EXPECT_NEAR(rep.mean.f1, 0.7, 1e-12);
}

TEST(Evaluate, LabelsAreScopedPerConcept) {
  // The same predicted label in two concepts does not join their words.
  const Wordlist gold = make_wordlist({{"A", "c1", "1"}, {"A", "c2", "1"}});
  EXPECT_DOUBLE_EQ(evaluate_labels(gold, {"k", "k"}).mean.f1, 1.0);
}

TEST(Evaluate, PerConceptPooling) {
  const Wordlist gold = make_wordlist({{"A", "c1", "x"}, {"A", "c1", "x"}, {"A", "c1", "y"}, {"A", "c2", "z"}});
  const auto rep = evaluate_labels(gold, {"1", "2", "3", "4"}, Pooling::per_concept);
  EXPECT_NEAR(rep.mean.f1, (0.8 + 1.0) / 2, 1e-12);
}

TEST(Evaluate, IdMismatchIsADataError) {
  const Wordlist gold = make_wordlist({{"A", "c", "x"}, {"A", "c", "y"}});
  Wordlist pred = gold;
  pred.rows[1].id = 99;
  try {
    evaluate_dataset(gold, pred);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("2"), std::string::npos);
    EXPECT_NE(msg.find("99"), std::string::npos);
  }
}
