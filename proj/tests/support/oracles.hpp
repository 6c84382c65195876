#pragma once

// Slow, independent reference implementations used by the unit and
// acceptance suites. None of them call into the library's algorithms.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cognate/alignment.hpp"
#include "cognate/rng.hpp"

namespace testing_support {

using cognate::ClassSequence;
using cognate::ScoringScheme;
using cognate::SoundClass;

// Scores a finished two-row alignment: substitution scores for aligned
// pairs, and per row every maximal run of gaps of length L costs
// open + (L - 1) * extend.
inline long gap_run_score(const ClassSequence& a, const ClassSequence& b, const ScoringScheme& s) {
  long total = 0;
  for (std::size_t k = 0; k < a.size(); ++k)
    if (a[k].kind != cognate::SoundKind::gap && b[k].kind != cognate::SoundKind::gap) total += s.score(a[k], b[k]);
  for (const ClassSequence* row : {&a, &b}) {
    std::size_t k = 0;
    while (k < row->size()) {
      if ((*row)[k].kind != cognate::SoundKind::gap) {
        ++k;
        continue;
      }
      std::size_t len = 0;
      while (k < row->size() && (*row)[k].kind == cognate::SoundKind::gap) ++len, ++k;
      total += s.gap_open + static_cast<long>(len - 1) * s.gap_extend;
    }
  }
  return total;
}

// Visits every global alignment of a and b (no gap-gap columns).
template <typename Visit>
void enumerate_alignments(const ClassSequence& a, const ClassSequence& b, Visit&& visit) {
  ClassSequence ra, rb;
  auto rec = [&](auto&& self, std::size_t i, std::size_t j) -> void {
    if (i == a.size() && j == b.size()) {
      visit(ra, rb);
      return;
    }
    if (i < a.size() && j < b.size()) {
      ra.push_back(a[i]), rb.push_back(b[j]);
      self(self, i + 1, j + 1);
      ra.pop_back(), rb.pop_back();
    }
    if (i < a.size()) {
      ra.push_back(a[i]), rb.push_back(cognate::kGapClass);
      self(self, i + 1, j);
      ra.pop_back(), rb.pop_back();
    }
    if (j < b.size()) {
      ra.push_back(cognate::kGapClass), rb.push_back(b[j]);
      self(self, i, j + 1);
      ra.pop_back(), rb.pop_back();
    }
  };
  rec(rec, 0, 0);
}

inline long exhaustive_best_score(const ClassSequence& a, const ClassSequence& b, const ScoringScheme& s) {
  long best = std::numeric_limits<long>::min();
  enumerate_alignments(a, b, [&](const ClassSequence& ra, const ClassSequence& rb) {
    best = std::max(best, gap_run_score(ra, rb, s));
  });
  return best;
}

// Naive UPGMA: every linkage is recomputed from the original matrix as the
// mean over all member pairs. Clusters live in slots; the merged cluster
// keeps the lower slot and ties go to the lexicographically smallest slot
// pair (within a relative 1e-12).
struct OracleMerge {
  std::vector<int> left;   // sorted leaves of the lower slot
  std::vector<int> right;  // sorted leaves of the higher slot
  double distance = 0.0;
};

inline double mean_linkage(const std::vector<std::vector<double>>& d, const std::vector<int>& x,
                           const std::vector<int>& y) {
  double sum = 0.0;
  for (int i : x)
    for (int j : y) sum += d[i][j];
  return sum / static_cast<double>(x.size() * y.size());
}

inline std::vector<OracleMerge> naive_upgma(const std::vector<std::vector<double>>& d, double stop_above) {
  const std::size_t r = d.size();
  std::vector<std::vector<int>> slots(r);
  for (std::size_t i = 0; i < r; ++i) slots[i] = {static_cast<int>(i)};
  std::vector<OracleMerge> merges;
  while (true) {
    double lowest = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = i + 1; j < r; ++j)
        if (!slots[i].empty() && !slots[j].empty()) lowest = std::min(lowest, mean_linkage(d, slots[i], slots[j]));
    if (!std::isfinite(lowest) || lowest > stop_above) break;
    const double cutoff = lowest + 1e-12 * std::max(1.0, std::abs(lowest));
    std::size_t bi = r, bj = r;
    for (std::size_t i = 0; i < r && bi == r; ++i)
      for (std::size_t j = i + 1; j < r; ++j)
        if (!slots[i].empty() && !slots[j].empty() && mean_linkage(d, slots[i], slots[j]) <= cutoff) {
          bi = i, bj = j;
          break;
        }
    OracleMerge m{slots[bi], slots[bj], mean_linkage(d, slots[bi], slots[bj])};
    std::sort(m.left.begin(), m.left.end());
    std::sort(m.right.begin(), m.right.end());
    merges.push_back(m);
    slots[bi].insert(slots[bi].end(), slots[bj].begin(), slots[bj].end());
    slots[bj].clear();
  }
  return merges;
}

// Flat clusters from the naive merges, labelled densely by first appearance.
inline std::vector<int> naive_flat_labels(const std::vector<std::vector<double>>& similarity, double threshold) {
  const std::size_t r = similarity.size();
  std::vector<std::vector<double>> d(r, std::vector<double>(r, 0.0));
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < r; ++j) d[i][j] = i == j ? 0.0 : 1.0 - similarity[i][j];
  std::vector<int> root(r);
  for (std::size_t i = 0; i < r; ++i) root[i] = static_cast<int>(i);
  for (const auto& m : naive_upgma(d, 1.0 - threshold)) {
    const int keep = root[m.left.front()];
    for (int leaf : m.right) root[leaf] = keep;
    for (int leaf : m.left) root[leaf] = keep;
  }
  std::map<int, int> dense;
  std::vector<int> labels(r);
  for (std::size_t i = 0; i < r; ++i) labels[i] = dense.try_emplace(root[i], static_cast<int>(dense.size())).first->second;
  return labels;
}

// Random symmetric zero-diagonal matrix in [0, 1]. Coarse matrices draw from
// five levels so that ties are common.
inline std::vector<std::vector<double>> random_distance_matrix(std::size_t r, cognate::Rng& rng, bool coarse) {
  std::vector<std::vector<double>> d(r, std::vector<double>(r, 0.0));
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = i + 1; j < r; ++j)
      d[i][j] = d[j][i] = coarse ? 0.2 * static_cast<double>(1 + rng.below(5)) : rng.uniform();
  return d;
}

struct OracleBCubed {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Per item: precision = |pred cluster ∩ gold cluster| / |pred cluster|,
// recall = same over |gold cluster|; both averaged over items.
inline OracleBCubed brute_force_bcubed(const std::vector<std::string>& gold, const std::vector<std::string>& pred) {
  const std::size_t n = gold.size();
  double p = 0.0, r = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double both = 0, in_pred = 0, in_gold = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const bool sp = pred[j] == pred[i], sg = gold[j] == gold[i];
      in_pred += sp;
      in_gold += sg;
      both += sp && sg;
    }
    p += both / in_pred;
    r += both / in_gold;
  }
  p /= static_cast<double>(n);
  r /= static_cast<double>(n);
  return {p, r, 2 * p * r / (p + r)};
}

}  // namespace testing_support
