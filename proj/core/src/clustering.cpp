#include "cognate/clustering.hpp"

#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace cognate {

std::size_t ClusterLabels::cluster_count() const {
  int top = -1;
  for (int l : labels) top = std::max(top, l);
  return static_cast<std::size_t>(top + 1);
}

ClusterLabels flat_upgma(const SimilarityMatrix& p, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw std::invalid_argument("flat_upgma: threshold must lie in (0, 1)");
  const std::size_t r = p.size();
  DistanceMatrix d(r, std::vector<double>(r, 0.0));
  for (std::size_t i = 0; i < r; ++i) {
    if (p[i].size() != r) throw std::invalid_argument("flat_upgma: similarity matrix is not square");
    for (std::size_t j = 0; j < r; ++j) d[i][j] = i == j ? 0.0 : 1.0 - p[i][j];
  }
  // slot -> representative; a merge of (i, j) folds j into i.
  std::vector<std::size_t> slot_of(r);
  std::iota(slot_of.begin(), slot_of.end(), 0);
  for (const auto& m : average_linkage(d, 1.0 - threshold))
    for (auto& s : slot_of)
      if (s == static_cast<std::size_t>(m.slot_j)) s = static_cast<std::size_t>(m.slot_i);

  ClusterLabels out;
  out.labels.resize(r);
  std::unordered_map<std::size_t, int> dense;
  for (std::size_t i = 0; i < r; ++i) {
    auto [it, fresh] = dense.try_emplace(slot_of[i], static_cast<int>(dense.size()));
    out.labels[i] = it->second;
  }
  return out;
}

ClusterLabels flat_upgma(const LinkProbabilities& p, double threshold) {
  const auto r = static_cast<std::size_t>(p.rows);
  SimilarityMatrix s(r, std::vector<double>(r));
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < r; ++j) s[i][j] = p.p[i * r + j];
  return flat_upgma(s, threshold);
}

ClusterLabels sca_baseline_cluster(const std::vector<Word>& words, const ScoringScheme& scheme, double threshold,
                                   const Phonology& phonology) {
  if (words.empty()) return {};
  const DistanceMatrix d = distance_matrix(words, scheme, phonology);
  SimilarityMatrix s(d.size(), std::vector<double>(d.size()));
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t j = 0; j < d.size(); ++j) s[i][j] = 1.0 - d[i][j];
  return flat_upgma(s, threshold);
}

}  // namespace cognate
