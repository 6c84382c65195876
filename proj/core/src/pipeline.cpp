#include "cognate/pipeline.hpp"

#include <stdexcept>

#include "cognate/diagnostics.hpp"
#include "cognate/evaluation.hpp"
#include "cognate/model.hpp"
#include "cognate/parallel.hpp"

namespace cognate {

AlignedConcept align_concept(const Wordlist& wl, const ConceptGroup& group, const ScoringScheme& scheme,
                             const Phonology& phonology) {
  AlignedConcept out;
  out.family = group.family;
  out.concept_name = group.concept_name;
  out.rows = group.rows;
  std::vector<Word> words;
  for (auto row : group.rows) {
    const auto& rec = wl.rows[row];
    words.push_back(phonology.merge_consecutive_vowels(rec.tokens));
    out.languages.push_back(rec.language);
    out.cogids.push_back(rec.cogid);
  }
  out.ipa = align_words(words, scheme, phonology);
  for (auto row : group.rows) out.ipa.meta.push_back({wl.rows[row].id, wl.rows[row].language});
  out.asjp = phonology.to_asjp(out.ipa, &global_warnings());
  return out;
}

std::vector<AlignedConcept> align_concepts(const Wordlist& wl, const ScoringScheme& scheme, unsigned workers,
                                           const Phonology& phonology) {
  const auto groups = group_by_concept(wl);
  std::vector<AlignedConcept> out(groups.size());
  parallel_for(groups.size(), workers, [&](std::size_t i) { out[i] = align_concept(wl, groups[i], scheme, phonology); });
  return out;
}

Vocabulary build_vocabulary(const std::vector<AlignedConcept>& concepts,
                            const std::vector<std::string>& extra_languages, std::size_t max_size) {
  std::vector<Word> rows;
  std::vector<std::string> languages = extra_languages;
  for (const auto& c : concepts) {
    rows.insert(rows.end(), c.asjp.rows.begin(), c.asjp.rows.end());
    languages.insert(languages.end(), c.languages.begin(), c.languages.end());
  }
  return Vocabulary::build(rows, std::move(languages), max_size);
}

TokenGrid tokenize(const AlignedConcept& concept_msa, const Vocabulary& vocab) {
  try {
    return tokenize_msa(concept_msa.asjp, concept_msa.languages, vocab);
  } catch (const DataError& e) {
    throw DataError(concept_msa.family + "/" + concept_msa.concept_name + ": " + e.what());
  }
}

std::size_t fit_grid(TokenGrid& grid, int max_rows, int max_cols, const std::string& what, Warnings* warnings) {
  Warnings& sink = warnings ? *warnings : global_warnings();
  const auto rmax = static_cast<std::size_t>(max_rows), cmax = static_cast<std::size_t>(max_cols);
  if (grid.rows > rmax) {
    sink.add(what + ": " + std::to_string(grid.rows - rmax) + " words beyond the row limit dropped");
    grid.ids.resize(rmax * grid.cols);
    grid.rows = rmax;
  }
  if (grid.cols > cmax) {
    sink.add(what + ": alignment truncated from " + std::to_string(grid.cols) + " to " + std::to_string(cmax) +
             " columns");
    TokenGrid cut;
    cut.rows = grid.rows;
    cut.cols = cmax;
    cut.ids.resize(cut.rows * cut.cols);
    for (std::size_t r = 0; r < grid.rows; ++r)
      for (std::size_t c = 0; c < cmax; ++c) cut.at(r, c) = grid.at(r, c);
    grid = std::move(cut);
  }
  return grid.rows;
}

namespace {

std::vector<std::string> concept_labels(const AlignedConcept& c, const ClusterLabels& labels) {
  std::vector<std::string> out;
  int next = static_cast<int>(labels.cluster_count());
  for (std::size_t i = 0; i < c.rows.size(); ++i) {
    // Words that did not fit the model each get their own cluster.
    const int id = i < labels.labels.size() ? labels.labels[i] : next++;
    out.push_back(c.concept_name + ":" + std::to_string(id));
  }
  return out;
}

}  // namespace

std::vector<std::string> predict_labels(const Wordlist& wl, const Checkpoint& ckpt, const PredictOptions& options,
                                        const ScoringScheme& scheme) {
  if (!ckpt.vocabulary) throw DataError("checkpoint carries no vocabulary");
  const double theta = options.threshold.value_or(ckpt.threshold.value_or(kDefaultLinkThreshold));
  if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("threshold must lie in (0, 1)");
  const auto concepts = align_concepts(wl, scheme, options.workers);
  std::vector<std::vector<std::string>> per_concept(concepts.size());
  parallel_for(concepts.size(), options.workers, [&](std::size_t i) {
    const auto& c = concepts[i];
    TokenGrid grid = tokenize(c, *ckpt.vocabulary);
    fit_grid(grid, ckpt.config.max_rows, ckpt.config.max_cols, c.family + "/" + c.concept_name);
    const LinkProbabilities p = predict_links(grid, ckpt.params, ckpt.config);
    per_concept[i] = concept_labels(c, flat_upgma(p, theta));
  });
  std::vector<std::string> labels(wl.rows.size());
  for (std::size_t i = 0; i < concepts.size(); ++i)
    for (std::size_t k = 0; k < concepts[i].rows.size(); ++k) labels[concepts[i].rows[k]] = per_concept[i][k];
  return labels;
}

Wordlist predict_wordlist(const Wordlist& wl, const Checkpoint& ckpt, const PredictOptions& options,
                          const ScoringScheme& scheme) {
  const auto labels = predict_labels(wl, ckpt, options, scheme);
  Wordlist out = wl;
  const std::size_t col = out.ensure_extra_column(kPredictedColumn);
  for (std::size_t i = 0; i < out.rows.size(); ++i) out.rows[i].extra[col] = labels[i];
  return out;
}

std::vector<std::string> sca_baseline_labels(const Wordlist& wl, double threshold, unsigned workers,
                                             const ScoringScheme& scheme) {
  const auto groups = group_by_concept(wl);
  std::vector<std::string> labels(wl.rows.size());
  parallel_for(groups.size(), workers, [&](std::size_t g) {
    std::vector<Word> words;
    for (auto row : groups[g].rows) words.push_back(Phonology::shipped().merge_consecutive_vowels(wl.rows[row].tokens));
    const ClusterLabels cl = sca_baseline_cluster(words, scheme, threshold);
    for (std::size_t k = 0; k < groups[g].rows.size(); ++k)
      labels[groups[g].rows[k]] = groups[g].concept_name + ":" + std::to_string(cl.labels[k]);
  });
  return labels;
}

}  // namespace cognate
