#include "cognate/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace cognate {

namespace {

constexpr char kConsonantLabels[] = "PBMWTDNSCKGHJLR";
constexpr char kVowelLabels[] = "AEIOUY";

// Consonant classes close enough in place or manner to count as related.
constexpr std::pair<char, char> kRelatedConsonants[] = {
    {'P', 'B'}, {'P', 'M'}, {'B', 'W'}, {'T', 'D'}, {'T', 'C'}, {'T', 'N'}, {'S', 'C'},
    {'S', 'D'}, {'K', 'G'}, {'K', 'C'}, {'G', 'H'}, {'L', 'R'},
};

enum class Step : std::uint8_t { diag, up, left };

template <typename Score>
struct DpResult {
  std::vector<Step> path;  // start to end
  Score score{};
};

// Three-state Gotoh recurrence. subst(i, j) scores a[i] against b[j].
// Predecessor preference on ties is always diag (M) > up (X) > left (Y).
template <typename Score, typename Subst>
DpResult<Score> gotoh(std::size_t n, std::size_t m, Subst subst, Score open, Score extend) {
  const Score neg = std::numeric_limits<Score>::lowest() / 4;
  const std::size_t w = m + 1;
  std::vector<Score> M((n + 1) * w, neg), X((n + 1) * w, neg), Y((n + 1) * w, neg);
  // Back-pointers: which state the predecessor cell was in (0=M, 1=X, 2=Y).
  std::vector<std::uint8_t> bm((n + 1) * w, 0), bx((n + 1) * w, 0), by((n + 1) * w, 0);
  M[0] = 0;

  auto pick = [](Score a, Score b, Score c, std::uint8_t& from) {
    Score best = a;
    from = 0;
    if (b > best) { best = b; from = 1; }
    if (c > best) { best = c; from = 2; }
    return best;
  };

  for (std::size_t i = 0; i <= n; ++i) {
    for (std::size_t j = 0; j <= m; ++j) {
      const std::size_t k = i * w + j;
      if (i > 0 && j > 0) {
        const std::size_t p = (i - 1) * w + (j - 1);
        const Score best = pick(M[p], X[p], Y[p], bm[k]);
        if (best > neg) M[k] = best + subst(i - 1, j - 1);
      }
      if (i > 0) {
        const std::size_t p = (i - 1) * w + j;
        const Score best = pick(M[p] > neg ? M[p] + open : neg, X[p] > neg ? X[p] + extend : neg,
                                Y[p] > neg ? Y[p] + open : neg, bx[k]);
        X[k] = best;
      }
      if (j > 0) {
        const std::size_t p = i * w + (j - 1);
        const Score best = pick(M[p] > neg ? M[p] + open : neg, X[p] > neg ? X[p] + open : neg,
                                Y[p] > neg ? Y[p] + extend : neg, by[k]);
        Y[k] = best;
      }
    }
  }

  DpResult<Score> out;
  std::uint8_t state = 0;
  const std::size_t end = n * w + m;
  out.score = pick(M[end], X[end], Y[end], state);
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    const std::size_t k = i * w + j;
    if (state == 0) {
      out.path.push_back(Step::diag);
      state = bm[k];
      --i;
      --j;
    } else if (state == 1) {
      out.path.push_back(Step::up);
      state = bx[k];
      --i;
    } else {
      out.path.push_back(Step::left);
      state = by[k];
      --j;
    }
  }
  std::reverse(out.path.begin(), out.path.end());
  return out;
}

int gap_run_score(std::size_t length, const ScoringScheme& s) {
  if (length == 0) return 0;
  return s.gap_open + static_cast<int>(length - 1) * s.gap_extend;
}

ClassSequence classes_of(const Word& word, const Phonology& phonology) {
  ClassSequence out;
  out.reserve(word.size());
  for (const auto& t : word) out.push_back(phonology.sound_class(t));
  return out;
}

}  // namespace

ScoringScheme::ScoringScheme() {
  for (auto& row : table_) row.fill(0);
}

void ScoringScheme::set_score(char a, char b, int value) {
  table_[index(a)][index(b)] = value;
  table_[index(b)][index(a)] = value;
}

ScoringScheme ScoringScheme::sca_default() {
  ScoringScheme s;
  s.gap_open = -4;
  s.gap_extend = -1;
  const std::string consonants = kConsonantLabels;
  const std::string vowels = kVowelLabels;
  for (char a : consonants)
    for (char b : consonants) s.set_score(a, b, a == b ? 10 : -2);
  for (const auto& [a, b] : kRelatedConsonants) s.set_score(a, b, 3);
  for (char a : vowels)
    for (char b : vowels) s.set_score(a, b, a == b ? 5 : 2);
  for (char a : consonants)
    for (char b : vowels) s.set_score(a, b, -5);
  s.set_score('Z', 'Z', 5);
  for (char a : consonants) s.set_score('Z', a, -5);
  for (char a : vowels) s.set_score('Z', a, -5);
  return s;
}

ScoringScheme ScoringScheme::uniform(int match, int mismatch, int gap_open, int gap_extend) {
  ScoringScheme s;
  s.gap_open = gap_open;
  s.gap_extend = gap_extend;
  for (int a = 0; a < 128; ++a)
    for (int b = 0; b < 128; ++b)
      s.table_[a][b] = a == b ? match : mismatch;
  return s;
}

bool ScoringScheme::satisfies_invariants(const std::vector<SoundClass>& classes) const {
  int min_same_kind_mismatch = std::numeric_limits<int>::max();
  int max_cross_kind = std::numeric_limits<int>::min();
  for (const auto& x : classes) {
    for (const auto& y : classes) {
      if (score(x, y) != score(y, x)) return false;
      if (x.label == y.label) continue;
      if (x.kind == y.kind) {
        if (score(x, x) <= score(x, y)) return false;
        min_same_kind_mismatch = std::min(min_same_kind_mismatch, score(x, y));
      } else if ((x.kind == SoundKind::consonant && y.kind == SoundKind::vowel) ||
                 (x.kind == SoundKind::vowel && y.kind == SoundKind::consonant)) {
        max_cross_kind = std::max(max_cross_kind, score(x, y));
      }
    }
  }
  return max_cross_kind <= min_same_kind_mismatch;
}

int alignment_score(const ClassSequence& row_a, const ClassSequence& row_b,
                    const ScoringScheme& scheme) {
  if (row_a.size() != row_b.size()) throw std::invalid_argument("alignment rows differ in length");
  int total = 0;
  std::size_t run_a = 0, run_b = 0;
  for (std::size_t c = 0; c < row_a.size(); ++c) {
    const bool ga = row_a[c].kind == SoundKind::gap;
    const bool gb = row_b[c].kind == SoundKind::gap;
    if (ga && gb) throw std::invalid_argument("gap-gap column");
    if (!ga && !gb) total += scheme.score(row_a[c], row_b[c]);
    if (ga) {
      ++run_a;
    } else {
      total += gap_run_score(run_a, scheme);
      run_a = 0;
    }
    if (gb) {
      ++run_b;
    } else {
      total += gap_run_score(run_b, scheme);
      run_b = 0;
    }
  }
  return total + gap_run_score(run_a, scheme) + gap_run_score(run_b, scheme);
}

double normalized_distance(int score, const ClassSequence& a, const ClassSequence& b,
                           const ScoringScheme& scheme) {
  double self_a = 0.0, self_b = 0.0;
  for (const auto& x : a) self_a += scheme.score(x, x);
  for (const auto& x : b) self_b += scheme.score(x, x);
  const double best = 0.5 * (self_a + self_b);
  const double worst = gap_run_score(a.size(), scheme) + gap_run_score(b.size(), scheme);
  if (best <= worst) return score >= best ? 0.0 : 1.0;
  const double d = 1.0 - (score - worst) / (best - worst);
  return std::clamp(d, 0.0, 1.0);
}

ClassAlignment align_classes(const ClassSequence& a, const ClassSequence& b,
                             const ScoringScheme& scheme) {
  if (a.empty() || b.empty()) throw std::invalid_argument("pairwise_align: empty sequence");
  const auto dp = gotoh<int>(
      a.size(), b.size(), [&](std::size_t i, std::size_t j) { return scheme.score(a[i], b[j]); },
      scheme.gap_open, scheme.gap_extend);
  ClassAlignment out;
  std::size_t i = 0, j = 0;
  for (const Step s : dp.path) {
    out.row_a.push_back(s == Step::left ? kGapClass : a[i++]);
    out.row_b.push_back(s == Step::up ? kGapClass : b[j++]);
  }
  out.score = dp.score;
  out.normalized_distance = normalized_distance(dp.score, a, b, scheme);
  return out;
}

PairwiseAlignment pairwise_align(const Word& a, const Word& b, const ScoringScheme& scheme,
                                 const Phonology& phonology) {
  if (a.empty() || b.empty()) throw std::invalid_argument("pairwise_align: empty sequence");
  const auto ca = classes_of(a, phonology);
  const auto cb = classes_of(b, phonology);
  const auto dp = gotoh<int>(
      a.size(), b.size(), [&](std::size_t i, std::size_t j) { return scheme.score(ca[i], cb[j]); },
      scheme.gap_open, scheme.gap_extend);
  PairwiseAlignment out;
  std::size_t i = 0, j = 0;
  for (const Step s : dp.path) {
    out.row_a.push_back(s == Step::left ? PhonemeToken::gap() : a[i++]);
    out.row_b.push_back(s == Step::up ? PhonemeToken::gap() : b[j++]);
  }
  out.score = dp.score;
  out.normalized_distance = normalized_distance(dp.score, ca, cb, scheme);
  return out;
}

DistanceMatrix distance_matrix(const std::vector<Word>& words, const ScoringScheme& scheme,
                               const Phonology& phonology) {
  const std::size_t r = words.size();
  std::vector<ClassSequence> classes;
  classes.reserve(r);
  for (const auto& w : words) classes.push_back(classes_of(w, phonology));
  DistanceMatrix d(r, std::vector<double>(r, 0.0));
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = i + 1; j < r; ++j)
      d[i][j] = d[j][i] = align_classes(classes[i], classes[j], scheme).normalized_distance;
  return d;
}

std::vector<int> GuideTree::leaves_under(int n) const {
  std::vector<int> out;
  std::vector<int> stack{n};
  while (!stack.empty()) {
    const int x = stack.back();
    stack.pop_back();
    if (is_leaf(x)) {
      out.push_back(x);
    } else {
      stack.push_back(nodes[x].right);
      stack.push_back(nodes[x].left);
    }
  }
  return out;
}

std::vector<Merge> average_linkage(const DistanceMatrix& d, double stop_above) {
  const std::size_t r = d.size();
  for (const auto& row : d)
    if (row.size() != r) throw std::invalid_argument("distance matrix is not square");
  DistanceMatrix work = d;
  std::vector<int> size(r, 1);
  std::vector<bool> active(r, true);
  std::vector<Merge> merges;
  for (std::size_t step = 1; step < r; ++step) {
    double lowest = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < r; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < r; ++j)
        if (active[j]) lowest = std::min(lowest, work[i][j]);
    }
    if (lowest > stop_above) break;
    const double cutoff = lowest + kLinkageTieTolerance * std::max(1.0, std::abs(lowest));
    int bi = -1, bj = -1;
    for (std::size_t i = 0; i < r && bi < 0; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < r; ++j) {
        if (active[j] && work[i][j] <= cutoff) {
          bi = static_cast<int>(i);
          bj = static_cast<int>(j);
          break;
        }
      }
    }
    merges.push_back({bi, bj, work[bi][bj]});
    const double ni = size[bi], nj = size[bj];
    for (std::size_t k = 0; k < r; ++k) {
      if (!active[k] || static_cast<int>(k) == bi || static_cast<int>(k) == bj) continue;
      const double v = (ni * work[bi][k] + nj * work[bj][k]) / (ni + nj);
      work[bi][k] = work[k][bi] = v;
    }
    size[bi] += size[bj];
    active[bj] = false;
  }
  return merges;
}

GuideTree upgma_tree(const DistanceMatrix& d) {
  if (d.empty()) throw std::invalid_argument("upgma_tree: empty distance matrix");
  const std::size_t r = d.size();
  GuideTree tree;
  tree.leaf_count = r;
  tree.nodes.resize(r);
  std::vector<int> slot_node(r);
  for (std::size_t i = 0; i < r; ++i) slot_node[i] = static_cast<int>(i);
  for (const auto& m : average_linkage(d, std::numeric_limits<double>::infinity())) {
    GuideTree::Node node;
    node.left = slot_node[m.slot_i];
    node.right = slot_node[m.slot_j];
    node.height = m.distance / 2.0;
    node.size = tree.nodes[node.left].size + tree.nodes[node.right].size;
    tree.nodes.push_back(node);
    slot_node[m.slot_i] = static_cast<int>(tree.nodes.size()) - 1;
  }
  return tree;
}

namespace {

struct Profile {
  std::vector<int> members;  // word indices
  std::vector<Word> rows;
  std::vector<ClassSequence> classes;

  std::size_t width() const { return rows.empty() ? 0 : rows.front().size(); }
};

double column_score(const Profile& a, std::size_t ca, const Profile& b, std::size_t cb,
                    const ScoringScheme& scheme) {
  double total = 0.0;
  std::size_t pairs = 0;
  for (const auto& ra : a.classes) {
    if (ra[ca].kind == SoundKind::gap) continue;
    for (const auto& rb : b.classes) {
      if (rb[cb].kind == SoundKind::gap) continue;
      total += scheme.score(ra[ca], rb[cb]);
      ++pairs;
    }
  }
  return pairs ? total / static_cast<double>(pairs) : 0.0;
}

Profile merge_profiles(const Profile& a, const Profile& b, const ScoringScheme& scheme) {
  const auto dp = gotoh<double>(
      a.width(), b.width(),
      [&](std::size_t i, std::size_t j) { return column_score(a, i, b, j, scheme); },
      static_cast<double>(scheme.gap_open), static_cast<double>(scheme.gap_extend));
  Profile out;
  out.members = a.members;
  out.members.insert(out.members.end(), b.members.begin(), b.members.end());
  out.rows.resize(out.members.size());
  out.classes.resize(out.members.size());
  std::size_t i = 0, j = 0;
  for (const Step s : dp.path) {
    for (std::size_t r = 0; r < a.rows.size(); ++r) {
      out.rows[r].push_back(s == Step::left ? PhonemeToken::gap() : a.rows[r][i]);
      out.classes[r].push_back(s == Step::left ? kGapClass : a.classes[r][i]);
    }
    for (std::size_t r = 0; r < b.rows.size(); ++r) {
      const std::size_t o = a.rows.size() + r;
      out.rows[o].push_back(s == Step::up ? PhonemeToken::gap() : b.rows[r][j]);
      out.classes[o].push_back(s == Step::up ? kGapClass : b.classes[r][j]);
    }
    if (s != Step::left) ++i;
    if (s != Step::up) ++j;
  }
  return out;
}

}  // namespace

Msa progressive_msa(const std::vector<Word>& words, const GuideTree& tree,
                    const ScoringScheme& scheme, const Phonology& phonology) {
  Msa msa;
  if (words.empty()) return msa;
  if (tree.leaf_count != words.size())
    throw std::invalid_argument("progressive_msa: guide tree does not cover all words");

  std::vector<Profile> profiles(tree.nodes.size());
  for (std::size_t n = 0; n < tree.nodes.size(); ++n) {
    if (tree.is_leaf(static_cast<int>(n))) {
      if (words[n].empty()) throw std::invalid_argument("progressive_msa: empty word");
      profiles[n].members = {static_cast<int>(n)};
      profiles[n].rows = {words[n]};
      profiles[n].classes = {classes_of(words[n], phonology)};
    } else {
      // Children always precede their parent in node order.
      const auto& node = tree.nodes[n];
      profiles[n] = merge_profiles(profiles[node.left], profiles[node.right], scheme);
      profiles[node.left] = {};
      profiles[node.right] = {};
    }
  }
  const Profile& root = profiles[static_cast<std::size_t>(tree.root())];
  msa.rows.resize(words.size());
  for (std::size_t r = 0; r < root.members.size(); ++r)
    msa.rows[static_cast<std::size_t>(root.members[r])] = root.rows[r];
  msa.drop_all_gap_columns();
  return msa;
}

Msa align_words(const std::vector<Word>& words, const ScoringScheme& scheme,
                const Phonology& phonology) {
  if (words.empty()) return {};
  return progressive_msa(words, upgma_tree(distance_matrix(words, scheme, phonology)), scheme,
                         phonology);
}

}  // namespace cognate
