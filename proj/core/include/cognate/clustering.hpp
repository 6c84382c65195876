#pragma once

#include <vector>

#include "cognate/alignment.hpp"
#include "cognate/model.hpp"

namespace cognate {

inline constexpr double kDefaultLinkThreshold = 0.6;
inline constexpr double kScaBaselineThreshold = 0.45;

// labels[i] is the cluster of word i; ids are dense from 0 in order of first
// appearance.
struct ClusterLabels {
  std::vector<int> labels;

  std::size_t cluster_count() const;
  bool operator==(const ClusterLabels&) const = default;
};

using SimilarityMatrix = std::vector<std::vector<double>>;

// Average-linkage agglomeration on d = 1 - p, merging while the closest pair
// of clusters is at distance <= 1 - threshold. Throws std::invalid_argument
// for a threshold outside (0, 1) or a non-square matrix.
ClusterLabels flat_upgma(const SimilarityMatrix& p, double threshold);
ClusterLabels flat_upgma(const LinkProbabilities& p, double threshold);

// Similarity 1 - normalized alignment distance, then flat_upgma.
ClusterLabels sca_baseline_cluster(const std::vector<Word>& words, const ScoringScheme& scheme,
                                   double threshold = kScaBaselineThreshold,
                                   const Phonology& phonology = Phonology::shipped());

}  // namespace cognate
