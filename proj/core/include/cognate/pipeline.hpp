#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cognate/alignment.hpp"
#include "cognate/checkpoint.hpp"
#include "cognate/clustering.hpp"
#include "cognate/dataio.hpp"
#include "cognate/phonology.hpp"

namespace cognate {

// One concept after vowel merging, progressive alignment on sound classes
// and conversion of the finished alignment to ASJP.
struct AlignedConcept {
  std::string family;
  std::string concept_name;
  std::vector<std::size_t> rows;  // indices into the source wordlist
  Msa ipa;                        // alignment before ASJP conversion
  Msa asjp;
  std::vector<std::string> languages;
  std::vector<std::string> cogids;
};

AlignedConcept align_concept(const Wordlist& wl, const ConceptGroup& group, const ScoringScheme& scheme,
                             const Phonology& phonology = Phonology::shipped());
std::vector<AlignedConcept> align_concepts(const Wordlist& wl, const ScoringScheme& scheme, unsigned workers,
                                           const Phonology& phonology = Phonology::shipped());

// Languages: those of the concepts plus `extra_languages` (e.g. a declared
// test inventory).
Vocabulary build_vocabulary(const std::vector<AlignedConcept>& concepts,
                            const std::vector<std::string>& extra_languages, std::size_t max_size);

TokenGrid tokenize(const AlignedConcept& concept_msa, const Vocabulary& vocab);

// Drops rows beyond max_rows and columns beyond max_cols, recording a
// warning naming the concept. Returns the number of rows kept.
std::size_t fit_grid(TokenGrid& grid, int max_rows, int max_cols, const std::string& what,
                     Warnings* warnings = nullptr);

struct PredictOptions {
  std::optional<double> threshold;  // overrides the checkpoint value
  unsigned workers = 1;
};

// Cluster ids "<concept>:<n>" for every row of wl, in row order.
std::vector<std::string> predict_labels(const Wordlist& wl, const Checkpoint& ckpt, const PredictOptions& options,
                                        const ScoringScheme& scheme = ScoringScheme::sca_default());

// wl plus a PREDICTED_COGID column.
Wordlist predict_wordlist(const Wordlist& wl, const Checkpoint& ckpt, const PredictOptions& options,
                          const ScoringScheme& scheme = ScoringScheme::sca_default());

// SCA baseline labels in the same "<concept>:<n>" form.
std::vector<std::string> sca_baseline_labels(const Wordlist& wl, double threshold, unsigned workers,
                                             const ScoringScheme& scheme = ScoringScheme::sca_default());

}  // namespace cognate
