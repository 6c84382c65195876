#include "cognate/training.hpp"

#include <cmath>
#include <stdexcept>

#include "cognate/checkpoint.hpp"
#include "cognate/clustering.hpp"
#include "cognate/diagnostics.hpp"
#include "cognate/evaluation.hpp"
#include "cognate/parallel.hpp"
#include "cognate/rng.hpp"

namespace cognate {

LinkTargets link_targets(const std::vector<std::string>& cluster_ids, const std::vector<std::uint8_t>& row_mask) {
  const int r = static_cast<int>(cluster_ids.size());
  if (!row_mask.empty() && row_mask.size() != cluster_ids.size())
    throw std::invalid_argument("link_targets: row mask size differs from id count");
  LinkTargets t;
  t.rows = r;
  t.l.assign(static_cast<std::size_t>(r) * r, kIgnoreLink);
  auto live = [&](int i) { return row_mask.empty() || row_mask[i]; };
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      if (i != j && live(i) && live(j))
        t.l[static_cast<std::size_t>(i) * r + j] = cluster_ids[i] == cluster_ids[j] ? 1 : 0;
  return t;
}

ag::Var link_loss(ag::Var logits, const LinkTargets& targets) {
  if (logits.shape() != ag::Shape{targets.rows, targets.rows, 2})
    throw std::invalid_argument("link_loss: logits do not match targets");
  return ag::link_cross_entropy(logits, targets.l);
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
    throw std::invalid_argument("validation_fraction must lie in (0, 1)");
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (threshold_grid.empty()) throw std::invalid_argument("threshold grid is empty");
  for (double t : threshold_grid)
    if (!(t > 0.0 && t < 1.0)) throw std::invalid_argument("thresholds must lie in (0, 1)");
}

void adamw_step(ParameterStore& params, const std::vector<std::vector<double>>& grads, AdamState& state,
                const TrainConfig& config) {
  auto& entries = params.entries();
  if (grads.size() != entries.size()) throw std::invalid_argument("adamw_step: gradient count mismatch");
  for (std::size_t i = 0; i < entries.size(); ++i)
    if (grads[i].size() != entries[i].data.size())
      throw std::invalid_argument("adamw_step: gradient shape mismatch for " + entries[i].name);
  if (state.m.empty()) {
    for (const auto& e : entries) {
      state.m.emplace_back(e.data.size(), 0.0);
      state.v.emplace_back(e.data.size(), 0.0);
    }
  }
  ++state.step;
  const double b1 = config.beta1, b2 = config.beta2, lr = config.learning_rate;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto& w = entries[i].data;
    auto& m = state.m[i];
    auto& v = state.v[i];
    const auto& g = grads[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      w[k] -= lr * config.weight_decay * w[k];
      m[k] = b1 * m[k] + (1.0 - b1) * g[k];
      v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
      w[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + config.epsilon);
    }
  }
}

namespace {

void cut_example(Example& ex, const ModelConfig& model, Warnings* warnings) {
  const std::size_t before = ex.tokens.rows;
  fit_grid(ex.tokens, model.max_rows, model.max_cols, "example " + std::to_string(ex.source), warnings);
  if (ex.tokens.rows == before) return;
  const int r = static_cast<int>(ex.tokens.rows);
  LinkTargets t;
  t.rows = r;
  t.l.resize(static_cast<std::size_t>(r) * r);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) t.l[static_cast<std::size_t>(i) * r + j] = ex.targets.at(i, j);
  ex.targets = std::move(t);
}

Example pad(const Example& ex, int rows, int cols) {
  Example out;
  out.source = ex.source;
  out.tokens.rows = static_cast<std::size_t>(rows);
  out.tokens.cols = static_cast<std::size_t>(cols);
  out.tokens.ids.assign(out.tokens.rows * out.tokens.cols, Vocabulary::kPad);
  for (std::size_t r = 0; r < ex.tokens.rows; ++r)
    for (std::size_t c = 0; c < ex.tokens.cols; ++c) out.tokens.at(r, c) = ex.tokens.at(r, c);
  out.targets.rows = rows;
  out.targets.l.assign(static_cast<std::size_t>(rows) * rows, kIgnoreLink);
  for (int i = 0; i < ex.targets.rows; ++i)
    for (int j = 0; j < ex.targets.rows; ++j) out.targets.l[static_cast<std::size_t>(i) * rows + j] = ex.targets.at(i, j);
  return out;
}

}  // namespace

std::vector<Batch> make_batches(std::vector<Example> examples, int batch_size, std::uint64_t seed,
                                const ModelConfig& model, Warnings* warnings) {
  if (batch_size < 1) throw std::invalid_argument("make_batches: batch_size must be >= 1");
  for (auto& ex : examples) {
    if (ex.targets.rows != static_cast<int>(ex.tokens.rows))
      throw std::invalid_argument("make_batches: targets do not match token grid");
    cut_example(ex, model, warnings);
  }
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));

  std::vector<Batch> batches;
  for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(batch_size));
    Batch b;
    for (std::size_t k = start; k < end; ++k) {
      const auto& ex = examples[order[k]];
      b.rows = std::max(b.rows, static_cast<int>(ex.tokens.rows));
      b.cols = std::max(b.cols, static_cast<int>(ex.tokens.cols));
    }
    for (std::size_t k = start; k < end; ++k) b.items.push_back(pad(examples[order[k]], b.rows, b.cols));
    batches.push_back(std::move(b));
  }
  return batches;
}

StepResult train_step(ParameterStore& params, AdamState& state, const Batch& batch, const ModelConfig& model,
                      const TrainConfig& config) {
  const std::size_t n = batch.items.size();
  std::vector<std::vector<std::vector<double>>> grads(n);
  std::vector<double> losses(n, 0.0);
  std::vector<bool> contributes(n, false);
  parallel_for(n, config.workers, [&](std::size_t i) {
    const auto& item = batch.items[i];
    bool any = false;
    for (auto t : item.targets.l) any = any || t != kIgnoreLink;
    if (!any) return;
    ag::Tape tape;
    BoundParams bound(params, tape);
    if (model.dropout > 0.0)
      bound.enable_dropout(model.dropout, Rng::derive(config.seed, 0x64726f70ULL + state.step, i).next());
    const ForwardOutput out = forward(item.tokens, bound, model);
    ag::Var loss = link_loss(out.logits, item.targets);
    tape.backward(loss);
    losses[i] = loss.item();
    grads[i] = bound.gradients();
    contributes[i] = true;
  });

  StepResult result;
  std::vector<std::vector<double>> total;
  for (std::size_t i = 0; i < n; ++i) {
    if (!contributes[i]) continue;
    if (total.empty()) {
      total = std::move(grads[i]);
    } else {
      for (std::size_t t = 0; t < total.size(); ++t)
        for (std::size_t k = 0; k < total[t].size(); ++k) total[t][k] += grads[i][t][k];
    }
    result.loss += losses[i];
    ++result.contributing;
  }
  if (result.contributing == 0) return result;
  const double scale = 1.0 / static_cast<double>(result.contributing);
  for (auto& g : total)
    for (auto& x : g) x *= scale;
  result.loss *= scale;
  adamw_step(params, total, state, config);
  return result;
}

std::vector<bool> validation_split(const std::vector<AlignedConcept>& concepts, double fraction, std::uint64_t seed) {
  std::vector<bool> flags(concepts.size(), false);
  std::vector<std::string> families;
  for (const auto& c : concepts)
    if (std::find(families.begin(), families.end(), c.family) == families.end()) families.push_back(c.family);
  for (std::size_t f = 0; f < families.size(); ++f) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < concepts.size(); ++i)
      if (concepts[i].family == families[f]) members.push_back(i);
    auto n = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(members.size()) - 1e-9));
    if (members.size() >= 2) n = std::max<std::size_t>(n, 1);
    if (members.size() < 2) n = 0;
    Rng rng = Rng::derive(seed, 0x76616cULL, f);
    rng.shuffle(std::span<std::size_t>(members));
    for (std::size_t k = 0; k < n; ++k) flags[members[k]] = true;
  }
  return flags;
}

ThresholdChoice sweep_threshold(const Wordlist& wl, const std::vector<AlignedConcept>& concepts,
                                const std::vector<LinkProbabilities>& probabilities, const TrainConfig& config) {
  if (concepts.size() != probabilities.size()) throw std::invalid_argument("sweep_threshold: size mismatch");
  if (concepts.empty()) throw std::invalid_argument("sweep_threshold: no concepts");
  Wordlist gold;
  gold.columns = wl.columns;
  gold.extra_columns = wl.extra_columns;
  for (const auto& c : concepts)
    for (auto row : c.rows) gold.rows.push_back(wl.rows[row]);

  const auto& grid = config.threshold_grid;
  std::vector<double> scores(grid.size());
  parallel_for(grid.size(), config.workers, [&](std::size_t t) {
    std::vector<std::string> predicted;
    for (std::size_t i = 0; i < concepts.size(); ++i) {
      const ClusterLabels cl = flat_upgma(probabilities[i], grid[t]);
      for (std::size_t k = 0; k < concepts[i].rows.size(); ++k)
        predicted.push_back(std::to_string(k < cl.labels.size() ? cl.labels[k] : -1 - static_cast<int>(k)));
    }
    scores[t] = evaluate_labels(gold, predicted).mean.f1;
  });
  std::vector<std::size_t> order(grid.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return grid[a] < grid[b]; });
  ThresholdChoice best{grid[order[0]], scores[order[0]]};
  for (auto t : order)
    if (scores[t] > best.validation_score) best = {grid[t], scores[t]};
  return best;
}

Checkpoint TrainResult::to_checkpoint() const {
  Checkpoint c{model, params, threshold.threshold, vocabulary};
  c.info["validation_score"] = threshold.validation_score;
  c.info["validation_concepts"] = validation_concepts;
  auto& h = c.info["history"] = nlohmann::json::array();
  for (const auto& e : history) h.push_back({{"epoch", e.epoch}, {"loss", e.loss}});
  return c;
}

TrainResult train(const Wordlist& train_wl, const TrainConfig& config, const ModelConfig& model,
                  const std::vector<std::string>& extra_languages, const ScoringScheme& scheme,
                  const EpochCallback& on_epoch) {
  config.validate();
  model.validate();
  if (train_wl.rows.empty()) throw std::invalid_argument("train: empty training wordlist");

  TrainResult result;
  result.model = model;
  const auto concepts = align_concepts(train_wl, scheme, config.workers);
  const auto held_out = validation_split(concepts, config.validation_fraction, config.seed);
  result.vocabulary = build_vocabulary(concepts, extra_languages, static_cast<std::size_t>(model.vocab_size));
  result.params = ParameterStore::initialize(model, config.seed);

  std::vector<Example> examples;
  for (std::size_t i = 0; i < concepts.size(); ++i) {
    if (held_out[i]) {
      result.validation_concepts.push_back(concepts[i].family + "/" + concepts[i].concept_name);
      continue;
    }
    examples.push_back(Example{tokenize(concepts[i], result.vocabulary), link_targets(concepts[i].cogids), i});
  }
  log(LogLevel::info, "training on " + std::to_string(examples.size()) + " concepts, " +
                          std::to_string(result.validation_concepts.size()) + " held out; " +
                          std::to_string(result.params.parameter_count()) + " parameters");

  AdamState state;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const std::uint64_t batch_seed = Rng::derive(config.seed, 0x626174ULL, static_cast<std::uint64_t>(epoch)).next();
    const auto batches = make_batches(examples, config.batch_size, batch_seed, model);
    double total = 0.0;
    std::size_t counted = 0;
    for (const auto& b : batches) {
      const StepResult s = train_step(result.params, state, b, model, config);
      total += s.loss * static_cast<double>(s.contributing);
      counted += s.contributing;
    }
    EpochRecord rec{epoch + 1, counted ? total / static_cast<double>(counted) : 0.0};
    result.history.push_back(rec);
    log(LogLevel::info, "epoch " + std::to_string(rec.epoch) + " loss " + std::to_string(rec.loss));
    if (on_epoch) on_epoch(rec);
  }
  round_to_float32(result.params);

  std::vector<AlignedConcept> sweep;
  for (std::size_t i = 0; i < concepts.size(); ++i)
    if (held_out[i]) sweep.push_back(concepts[i]);
  if (sweep.empty()) {
    log(LogLevel::info, "no validation concepts; sweeping the threshold on training concepts");
    sweep = concepts;
  }
  std::vector<LinkProbabilities> probs(sweep.size());
  parallel_for(sweep.size(), config.workers, [&](std::size_t i) {
    TokenGrid grid = tokenize(sweep[i], result.vocabulary);
    fit_grid(grid, model.max_rows, model.max_cols, sweep[i].family + "/" + sweep[i].concept_name);
    probs[i] = predict_links(grid, result.params, model);
  });
  result.threshold = sweep_threshold(train_wl, sweep, probs, config);
  log(LogLevel::info, "threshold " + std::to_string(result.threshold.threshold) + " (validation F " +
                          std::to_string(result.threshold.validation_score) + ")");
  return result;
}

}  // namespace cognate
