#pragma once

#include <array>
#include <functional>
#include <vector>

#include "cognate/msa.hpp"
#include "cognate/phonology.hpp"

namespace cognate {

// Symmetric class-by-class substitution scores plus affine gap penalties.
// A gap run of length L scores gap_open + (L - 1) * gap_extend.
class ScoringScheme {
 public:
  ScoringScheme();

  // The shipped scheme: identical class +10 (vowels +5), related consonant
  // classes +3, other consonant mismatches -2, vowel mismatches +2,
  // consonant/vowel -5, gap open -4, extend -1.
  static ScoringScheme sca_default();

  // match for equal labels, mismatch otherwise (kinds ignored).
  static ScoringScheme uniform(int match, int mismatch, int gap_open, int gap_extend);

  int score(SoundClass a, SoundClass b) const { return table_[index(a.label)][index(b.label)]; }
  void set_score(char a, char b, int value);

  int gap_open = -4;
  int gap_extend = -1;

  // Symmetric, identity strictly above same-kind mismatches, consonant/vowel
  // pairs at or below every same-kind mismatch. Checked over `classes`.
  bool satisfies_invariants(const std::vector<SoundClass>& classes) const;

 private:
  static std::size_t index(char label) { return static_cast<unsigned char>(label) & 0x7f; }
  std::array<std::array<int, 128>, 128> table_{};
};

using ClassSequence = std::vector<SoundClass>;

struct PairwiseAlignment {
  Word row_a;
  Word row_b;
  int score = 0;
  double normalized_distance = 0.0;
};

// Score of one fixed alignment of two class rows (gaps as kGapClass).
int alignment_score(const ClassSequence& row_a, const ClassSequence& row_b,
                    const ScoringScheme& scheme);

// Affine-gap global alignment on sound classes. Traceback prefers diagonal,
// then up (gap in b), then left (gap in a). Throws std::invalid_argument on
// empty input.
PairwiseAlignment pairwise_align(const Word& a, const Word& b, const ScoringScheme& scheme,
                                 const Phonology& phonology = Phonology::shipped());

// Same alignment directly on class sequences; rows are returned as classes.
struct ClassAlignment {
  ClassSequence row_a;
  ClassSequence row_b;
  int score = 0;
  double normalized_distance = 0.0;
};
ClassAlignment align_classes(const ClassSequence& a, const ClassSequence& b,
                             const ScoringScheme& scheme);

// 1 - (score - worst) / (best - worst), clamped to [0, 1].
double normalized_distance(int score, const ClassSequence& a, const ClassSequence& b,
                           const ScoringScheme& scheme);

using DistanceMatrix = std::vector<std::vector<double>>;

DistanceMatrix distance_matrix(const std::vector<Word>& words, const ScoringScheme& scheme,
                               const Phonology& phonology = Phonology::shipped());

// UPGMA dendrogram. Leaves are nodes [0, r); internal node r + k is the k-th
// merge. Merge heights are half the average-linkage distance.
struct GuideTree {
  struct Node {
    int left = -1;
    int right = -1;
    double height = 0.0;
    int size = 1;
  };
  std::size_t leaf_count = 0;
  std::vector<Node> nodes;

  int root() const { return static_cast<int>(nodes.size()) - 1; }
  bool is_leaf(int n) const { return static_cast<std::size_t>(n) < leaf_count; }
  std::vector<int> leaves_under(int n) const;
};

// Relative tolerance under which two linkage distances count as tied.
inline constexpr double kLinkageTieTolerance = 1e-12;

// One agglomeration step: clusters occupying slots i < j merged at the
// given average-linkage distance. The merged cluster keeps slot i.
struct Merge {
  int slot_i = 0;
  int slot_j = 0;
  double distance = 0.0;
};

// Average-linkage agglomeration over a distance matrix. Stops before any
// merge whose distance exceeds `stop_above` (pass +inf to run to the root).
// Ties go to the lexicographically smallest slot pair.
std::vector<Merge> average_linkage(const DistanceMatrix& d, double stop_above);

// Throws std::invalid_argument for r == 0 or a non-square matrix.
GuideTree upgma_tree(const DistanceMatrix& d);

// Aligns profiles bottom-up along the guide tree. Rows keep input order; the
// result never has an all-gap column.
Msa progressive_msa(const std::vector<Word>& words, const GuideTree& tree,
                    const ScoringScheme& scheme, const Phonology& phonology = Phonology::shipped());

// distance_matrix -> upgma_tree -> progressive_msa.
Msa align_words(const std::vector<Word>& words, const ScoringScheme& scheme,
                const Phonology& phonology = Phonology::shipped());

}  // namespace cognate
