#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cognate/alignment.hpp"
#include "cognate/autograd.hpp"
#include "cognate/dataio.hpp"
#include "cognate/model.hpp"
#include "cognate/pipeline.hpp"

namespace cognate {

inline constexpr std::int8_t kIgnoreLink = -1;

// r x r link labels: 1 same cluster, 0 different, kIgnoreLink on the
// diagonal and for masked rows.
struct LinkTargets {
  int rows = 0;
  std::vector<std::int8_t> l;

  std::int8_t at(int i, int j) const { return l[static_cast<std::size_t>(i) * rows + j]; }
};

// An empty row_mask means every row is live.
LinkTargets link_targets(const std::vector<std::string>& cluster_ids, const std::vector<std::uint8_t>& row_mask = {});

// Mean cross-entropy over non-ignored ordered pairs; 0 with no gradient when
// everything is ignored.
ag::Var link_loss(ag::Var logits, const LinkTargets& targets);

struct TrainConfig {
  int batch_size = 4;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
  int epochs = 30;
  double validation_fraction = 0.05;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  // Candidate thresholds, swept in ascending order.
  std::vector<double> threshold_grid = {0.30, 0.35, 0.40, 0.45, 0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80};

  void validate() const;
};

struct AdamState {
  long step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

// Decoupled weight decay with bias correction. Throws std::invalid_argument
// if grads do not match the parameter shapes.
void adamw_step(ParameterStore& params, const std::vector<std::vector<double>>& grads, AdamState& state,
                const TrainConfig& config);

struct Example {
  TokenGrid tokens;
  LinkTargets targets;
  std::size_t source = 0;  // caller's index, e.g. into a concept list
};

// Every example padded to the batch's largest row and column count.
struct Batch {
  int rows = 0;
  int cols = 0;
  std::vector<Example> items;
};

// Shuffles with `seed`, cuts into batches, pads. Examples larger than the
// model limits are cut down first, with a warning.
std::vector<Batch> make_batches(std::vector<Example> examples, int batch_size, std::uint64_t seed,
                                const ModelConfig& model, Warnings* warnings = nullptr);

struct StepResult {
  double loss = 0.0;          // mean over contributing items
  std::size_t contributing = 0;
};

// Forward/backward per item on separate tapes, gradients averaged over
// contributing items in item order, then one AdamW update.
StepResult train_step(ParameterStore& params, AdamState& state, const Batch& batch, const ModelConfig& model,
                      const TrainConfig& config);

struct ThresholdChoice {
  double threshold = 0.6;
  double validation_score = 0.0;
};

// Picks the grid value with the best mean family B-Cubed F over `concepts`
// (ties go to the lower threshold).
ThresholdChoice sweep_threshold(const Wordlist& wl, const std::vector<AlignedConcept>& concepts,
                                const std::vector<LinkProbabilities>& probabilities, const TrainConfig& config);

// Per family, ceil(fraction * concepts) concepts, at least one when the
// family has two or more. Returns a flag per group.
std::vector<bool> validation_split(const std::vector<AlignedConcept>& concepts, double fraction, std::uint64_t seed);

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
};

struct TrainResult {
  ModelConfig model;
  ParameterStore params;  // rounded to float32, identical to what a checkpoint stores
  Vocabulary vocabulary;
  ThresholdChoice threshold;
  std::vector<EpochRecord> history;
  std::vector<std::string> validation_concepts;  // "family/concept"

  Checkpoint to_checkpoint() const;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Throws std::invalid_argument for an empty training set.
TrainResult train(const Wordlist& train_wl, const TrainConfig& config, const ModelConfig& model,
                  const std::vector<std::string>& extra_languages = {},
                  const ScoringScheme& scheme = ScoringScheme::sca_default(), const EpochCallback& on_epoch = {});

}  // namespace cognate
