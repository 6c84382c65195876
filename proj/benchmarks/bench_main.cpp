#include <benchmark/benchmark.h>

#include "cognate/alignment.hpp"
#include "cognate/clustering.hpp"
#include "cognate/diagnostics.hpp"
#include "cognate/evaluation.hpp"
#include "cognate/model.hpp"
#include "cognate/pipeline.hpp"
#include "cognate/rng.hpp"
#include "cognate/synthetic.hpp"
#include "cognate/training.hpp"

using namespace cognate;

namespace {

const std::vector<std::string> kSegments{"p", "t", "k", "m", "n", "s", "l", "r", "a", "e", "i", "o", "u"};

Word random_word(Rng& rng, std::size_t length) {
  Word w;
  for (std::size_t i = 0; i < length; ++i) w.emplace_back(kSegments[rng.below(kSegments.size())]);
  return w;
}

std::vector<Word> random_words(std::size_t count, std::size_t length, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Word> words;
  for (std::size_t i = 0; i < count; ++i) words.push_back(random_word(rng, length));
  return words;
}

// The first aligned concept of the synthetic training split.
TokenGrid concept_grid(const ModelConfig& cfg) {
  const auto data = make_synthetic();
  const auto concepts = align_concepts(data.train, ScoringScheme::sca_default(), 1);
  const auto vocab = build_vocabulary(concepts, data.languages, static_cast<std::size_t>(cfg.vocab_size));
  return tokenize(concepts.front(), vocab);
}

void BM_PairwiseAlign(benchmark::State& state) {
  const auto words = random_words(2, static_cast<std::size_t>(state.range(0)), 1);
  const auto& scheme = ScoringScheme::sca_default();
  for (auto _ : state) benchmark::DoNotOptimize(pairwise_align(words[0], words[1], scheme));
}
BENCHMARK(BM_PairwiseAlign)->Arg(4)->Arg(8)->Arg(16);

void BM_AlignWords(benchmark::State& state) {
  const auto words = random_words(static_cast<std::size_t>(state.range(0)), 6, 2);
  const auto& scheme = ScoringScheme::sca_default();
  for (auto _ : state) benchmark::DoNotOptimize(align_words(words, scheme));
}
BENCHMARK(BM_AlignWords)->Arg(8)->Arg(16)->Arg(32);

void BM_FlatUpgma(benchmark::State& state) {
  const auto r = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  SimilarityMatrix p(r, std::vector<double>(r, 1.0));
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = i + 1; j < r; ++j) p[i][j] = p[j][i] = rng.uniform();
  for (auto _ : state) benchmark::DoNotOptimize(flat_upgma(p, 0.6));
}
BENCHMARK(BM_FlatUpgma)->Arg(8)->Arg(32)->Arg(128);

void BM_BCubed(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(4);
  std::vector<std::string> gold(n), pred(n);
  for (std::size_t i = 0; i < n; ++i) {
    gold[i] = std::to_string(rng.below(n / 4 + 1));
    pred[i] = std::to_string(rng.below(n / 4 + 1));
  }
  for (auto _ : state) benchmark::DoNotOptimize(bcubed(gold, pred));
}
BENCHMARK(BM_BCubed)->Arg(100)->Arg(10000);

void BM_PredictLinks(benchmark::State& state) {
  const ModelConfig cfg;
  const auto params = ParameterStore::initialize(cfg, 5);
  const TokenGrid grid = concept_grid(cfg);
  for (auto _ : state) benchmark::DoNotOptimize(predict_links(grid, params, cfg));
  state.counters["rows"] = static_cast<double>(grid.rows);
  state.counters["cols"] = static_cast<double>(grid.cols);
}
BENCHMARK(BM_PredictLinks)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  const ModelConfig cfg;
  ParameterStore params = ParameterStore::initialize(cfg, 6);
  const TokenGrid grid = concept_grid(cfg);
  std::vector<std::string> ids(grid.rows, "1");
  ids.back() = "2";
  Batch batch;
  batch.items.push_back({grid, link_targets(ids), 0});
  batch.rows = static_cast<int>(grid.rows);
  batch.cols = static_cast<int>(grid.cols);
  AdamState adam;
  const TrainConfig tc;
  for (auto _ : state) benchmark::DoNotOptimize(train_step(params, adam, batch, cfg, tc));
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

}  // namespace

int main(int argc, char** argv) {
  set_log_level(LogLevel::error);
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
