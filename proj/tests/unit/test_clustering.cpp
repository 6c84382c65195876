#include <gtest/gtest.h>

#include "cognate/clustering.hpp"
#include "cognate/rng.hpp"
#include "oracles.hpp"

using namespace cognate;
using testing_support::naive_flat_labels;

namespace {

SimilarityMatrix random_similarity(std::size_t r, Rng& rng, bool coarse) {
  const auto d = testing_support::random_distance_matrix(r, rng, coarse);
  SimilarityMatrix p(r, std::vector<double>(r, 1.0));
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < r; ++j)
      if (i != j) p[i][j] = 1.0 - d[i][j];
  return p;
}

bool transitive(const ClusterLabels& c) {
  const std::size_t r = c.labels.size();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < r; ++j)
      for (std::size_t k = 0; k < r; ++k)
        if (c.labels[i] == c.labels[j] && c.labels[j] == c.labels[k] && c.labels[i] != c.labels[k]) return false;
  return true;
}

// Every cluster of `fine` lies inside one cluster of `coarse`.
bool refines(const ClusterLabels& fine, const ClusterLabels& coarse) {
  for (std::size_t i = 0; i < fine.labels.size(); ++i)
    for (std::size_t j = 0; j < fine.labels.size(); ++j)
      if (fine.labels[i] == fine.labels[j] && coarse.labels[i] != coarse.labels[j]) return false;
  return true;
}

}  // namespace

TEST(FlatUpgma, Examples) {
  EXPECT_EQ(flat_upgma(SimilarityMatrix(4, std::vector<double>(4, 1.0)), 0.6).labels, (std::vector<int>{0, 0, 0, 0}));
  SimilarityMatrix zero(3, std::vector<double>(3, 0.0));
  for (int i = 0; i < 3; ++i) zero[i][i] = 1.0;
  EXPECT_EQ(flat_upgma(zero, 0.6).labels, (std::vector<int>{0, 1, 2}));
  const SimilarityMatrix p{{1, 0.9, 0.2}, {0.9, 1, 0.3}, {0.2, 0.3, 1}};
  EXPECT_EQ(flat_upgma(p, 0.6).labels, (std::vector<int>{0, 0, 1}));
  EXPECT_TRUE(flat_upgma(SimilarityMatrix{}, 0.6).labels.empty());
  EXPECT_THROW(flat_upgma(p, 0.0), std::invalid_argument);
  EXPECT_THROW(flat_upgma(p, 1.0), std::invalid_argument);
}

TEST(FlatUpgma, LinkProbabilityOverloadAgrees) {
  LinkProbabilities lp;
  lp.rows = 3;
  lp.p = {1, 0.9, 0.2, 0.9, 1, 0.3, 0.2, 0.3, 1};
  EXPECT_EQ(flat_upgma(lp, 0.6).labels, (std::vector<int>{0, 0, 1}));
}

TEST(FlatUpgma, MatchesNaiveOracle) {
  Rng rng(21);
  for (int n = 0; n < 300; ++n) {
    const std::size_t r = 1 + rng.below(8);
    const auto p = random_similarity(r, rng, n % 2 == 1);
    const double theta = 0.05 + 0.9 * rng.uniform();
    EXPECT_EQ(flat_upgma(p, theta).labels, naive_flat_labels(p, theta)) << "case " << n;
  }
}

TEST(FlatUpgma, TransitiveAndNestedAcrossThresholds) {
  Rng rng(22);
  for (int n = 0; n < 200; ++n) {
    const auto p = random_similarity(5, rng, n % 3 == 0);
    double t1 = 0.05 + 0.9 * rng.uniform(), t2 = 0.05 + 0.9 * rng.uniform();
    if (t1 > t2) std::swap(t1, t2);
    const auto low = flat_upgma(p, t1), high = flat_upgma(p, t2);
    EXPECT_TRUE(transitive(low));
    EXPECT_TRUE(transitive(high));
    // A higher similarity threshold cuts the same dendrogram lower.
    EXPECT_TRUE(refines(high, low));
  }
}

TEST(ScaBaseline, Examples) {
  const auto& s = ScoringScheme::sca_default();
  EXPECT_EQ(sca_baseline_cluster({parse_word("p a t"), parse_word("p a t"), parse_word("p a t")}, s).labels,
            (std::vector<int>{0, 0, 0}));
  EXPECT_EQ(sca_baseline_cluster({parse_word("p a p a"), parse_word("i")}, s).labels, (std::vector<int>{0, 1}));
}

TEST(ScaBaseline, AgreesWithPairwiseDistancesThroughOracle) {
  const std::vector<Word> words{parse_word("t o x t e r"), parse_word("d o t e r"), parse_word("f i l j a")};
  const auto& s = ScoringScheme::sca_default();
  SimilarityMatrix p(3, std::vector<double>(3, 1.0));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      if (i != j) p[i][j] = 1.0 - pairwise_align(words[i], words[j], s).normalized_distance;
  EXPECT_EQ(sca_baseline_cluster(words, s, 0.45).labels, naive_flat_labels(p, 0.45));
}
