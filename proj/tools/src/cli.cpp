#include "cognate/cli.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cognate/checkpoint.hpp"
#include "cognate/diagnostics.hpp"
#include "cognate/evaluation.hpp"
#include "cognate/parallel.hpp"
#include "cognate/pipeline.hpp"
#include "cognate/synthetic.hpp"
#include "cognate/training.hpp"

namespace cognate::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string input;
  std::string output;
  std::string checkpoint;
  std::string gold;
  std::string test;
  std::string languages;
  std::optional<double> threshold;
  std::uint64_t seed = 0;
  std::optional<int> epochs;
  int batch_size = 4;
  std::optional<double> dropout;
  bool deterministic = false;
  bool json = false;
  bool per_concept = false;
  unsigned workers = 0;
  std::string log_level = "info";
  double proportion = 0.125;
  int folds = 5;
};

unsigned effective_workers(const Options& o) {
  if (o.deterministic) return 1;
  return o.workers > 0 ? o.workers : default_workers();
}

// Writes to the file named by `path`, or to `out` when it is empty or "-".
void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-")
    out << text;
  else
    write_text_file(path, text);
}

// One block per concept: ID, DOCULECT, then the aligned IPA tokens.
std::string format_alignment(const AlignedConcept& c, const Wordlist& wl) {
  std::ostringstream s;
  for (std::size_t i = 0; i < c.rows.size(); ++i) {
    s << wl.rows[c.rows[i]].id << '\t' << c.languages[i];
    for (const auto& t : c.ipa.rows[i]) s << '\t' << t.str();
    s << '\n';
  }
  return s.str();
}

// File-system safe stand-in for a family or concept name.
std::string file_stem(const std::string& name) {
  std::string out;
  for (unsigned char ch : name) out += (std::isalnum(ch) || ch == '-' || ch == '_' || ch >= 0x80) ? static_cast<char>(ch) : '_';
  return out.empty() ? "_" : out;
}

TrainConfig train_config(const Options& o) {
  TrainConfig tc;
  tc.seed = o.seed;
  tc.batch_size = o.batch_size;
  if (o.epochs) tc.epochs = *o.epochs;
  tc.workers = effective_workers(o);
  return tc;
}

ModelConfig model_config(const Options& o) {
  ModelConfig mc;
  if (o.dropout) mc.dropout = *o.dropout;
  return mc;
}

EpochCallback epoch_logger(int epochs) {
  return [epochs](const EpochRecord& r) {
    std::ostringstream s;
    s << "epoch " << r.epoch << "/" << epochs << " loss " << r.loss;
    log(LogLevel::info, s.str());
  };
}

int cmd_align(const Options& o, std::ostream& out) {
  const Wordlist wl = load_wordlist(o.input, {.default_family = {}, .require_cogid = false});
  const auto concepts = align_concepts(wl, ScoringScheme::sca_default(), effective_workers(o));
  if (o.output.empty() || o.output == "-") {
    for (const auto& c : concepts) out << "# " << c.family << '/' << c.concept_name << '\n' << format_alignment(c, wl);
    return kExitOk;
  }
  for (const auto& c : concepts) {
    const fs::path dir = fs::path(o.output) / file_stem(c.family);
    fs::create_directories(dir);
    write_text_file(dir / (file_stem(c.concept_name) + ".tsv"), format_alignment(c, wl));
  }
  log(LogLevel::info, "wrote " + std::to_string(concepts.size()) + " alignments under " + o.output);
  return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  const Wordlist wl = load_wordlist(o.input);
  std::vector<std::string> extra;
  if (!o.languages.empty()) extra = load_language_inventory(o.languages);
  const TrainConfig tc = train_config(o);
  const TrainResult result = train(wl, tc, model_config(o), extra, ScoringScheme::sca_default(), epoch_logger(tc.epochs));
  save_checkpoint(result.to_checkpoint(), o.checkpoint);
  out << "threshold " << result.threshold.threshold << " validation_f " << result.threshold.validation_score << '\n';
  return kExitOk;
}

int cmd_predict(const Options& o, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(o.checkpoint);
  const Wordlist wl = load_wordlist(o.input, {.default_family = {}, .require_cogid = false});
  PredictOptions po;
  po.threshold = o.threshold;
  po.workers = effective_workers(o);
  emit(o.output, format_wordlist(predict_wordlist(wl, ckpt, po)), out);
  return kExitOk;
}

std::string render(const EvaluationReport& report, bool json) {
  return json ? report.to_json().dump(2) + "\n" : report.to_table();
}

int cmd_evaluate(const Options& o, std::ostream& out) {
  const Wordlist gold = load_wordlist(o.gold);
  const Wordlist predicted = load_wordlist(o.input, {.default_family = {}, .require_cogid = false});
  const auto report = evaluate_dataset(gold, predicted, o.per_concept ? Pooling::per_concept : Pooling::per_family);
  emit(o.output, render(report, o.json), out);
  return kExitOk;
}

int cmd_split(const Options& o, std::ostream& out) {
  const Wordlist train_wl = load_wordlist(o.input);
  const Wordlist test_wl = load_wordlist(o.test);
  const auto folds = augment_split(train_wl, test_wl, {.proportion = o.proportion, .folds = o.folds, .seed = o.seed});
  for (std::size_t k = 0; k < folds.size(); ++k) {
    const fs::path dir = fs::path(o.output) / ("fold_" + std::to_string(k));
    fs::create_directories(dir);
    save_wordlist(folds[k].train, dir / "train.tsv");
    save_wordlist(folds[k].test, dir / "test.tsv");
    out << dir.string() << ": " << folds[k].train.rows.size() << " train, " << folds[k].test.rows.size()
        << " test words\n";
  }
  return kExitOk;
}

int cmd_demo(const Options& o, std::ostream& out) {
  Wordlist train_wl, test_wl;
  std::vector<std::string> languages;
  if (o.input.empty()) {
    SyntheticData data = make_synthetic();
    train_wl = std::move(data.train);
    test_wl = std::move(data.test);
    languages = std::move(data.languages);
  } else {
    train_wl = load_wordlist(fs::path(o.input) / "train.tsv");
    test_wl = load_wordlist(fs::path(o.input) / "test.tsv");
    languages = test_wl.languages();
  }
  const TrainConfig tc = train_config(o);
  const TrainResult result =
      train(train_wl, tc, model_config(o), languages, ScoringScheme::sca_default(), epoch_logger(tc.epochs));
  const Checkpoint ckpt = result.to_checkpoint();
  if (!o.checkpoint.empty()) save_checkpoint(ckpt, o.checkpoint);
  PredictOptions po;
  po.threshold = o.threshold;
  po.workers = effective_workers(o);
  const auto labels = predict_labels(test_wl, ckpt, po);
  const auto report = evaluate_labels(test_wl, labels, o.per_concept ? Pooling::per_concept : Pooling::per_family);
  if (!o.json) out << "threshold " << po.threshold.value_or(result.threshold.threshold) << '\n';
  out << render(report, o.json);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cognate detection: align, train, predict, evaluate", "cognate"};
  app.require_subcommand(1);
  Options o;

  app.add_option("--log-level", o.log_level, "debug, info, warn, error or off")->capture_default_str();
  const CLI::Validator threshold_check(
      [](std::string& s) -> std::string {
        double v = 0;
        try {
          v = std::stod(s);
        } catch (...) {
          return "threshold must be a number";
        }
        return v > 0.0 && v < 1.0 ? std::string() : "threshold must lie in (0, 1)";
      },
      "(0,1)");

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--workers", o.workers, "worker threads (0 = all cores)");
    sub->add_flag("--deterministic", o.deterministic, "single worker, fixed reduction order");
    sub->add_option("--log-level", o.log_level, "debug, info, warn, error or off");
  };
  auto add_training = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "random seed")->capture_default_str();
    sub->add_option("--epochs", o.epochs, "training epochs");
    sub->add_option("--batch-size", o.batch_size, "concepts per batch")->capture_default_str()->check(
        CLI::PositiveNumber);
    sub->add_option("--dropout", o.dropout, "dropout rate on residual branches")->check(CLI::Range(0.0, 0.99));
  };

  auto* align = app.add_subcommand("align", "write the per-concept alignments of a wordlist");
  align->add_option("--input", o.input, "wordlist TSV or directory")->required();
  align->add_option("--output", o.output, "directory receiving <family>/<concept>.tsv (default stdout)");
  add_common(align);

  auto* train_cmd = app.add_subcommand("train", "train a model and store a checkpoint");
  train_cmd->add_option("--input", o.input, "training wordlist")->required();
  train_cmd->add_option("--checkpoint", o.checkpoint, "checkpoint to write")->required();
  train_cmd->add_option("--languages", o.languages, "extra language inventory, one per line");
  add_training(train_cmd);
  add_common(train_cmd);

  auto* predict = app.add_subcommand("predict", "cluster a wordlist with a trained model");
  predict->add_option("--input", o.input, "wordlist to cluster")->required();
  predict->add_option("--checkpoint", o.checkpoint, "trained checkpoint")->required();
  predict->add_option("--output", o.output, "output TSV (default stdout)");
  predict->add_option("--threshold", o.threshold, "override the stored threshold")->check(threshold_check);
  add_common(predict);

  auto* evaluate = app.add_subcommand("evaluate", "B-Cubed scores of predictions against gold labels");
  evaluate->add_option("--input", o.input, "predicted wordlist (PREDICTED_COGID, else COGID)")->required();
  evaluate->add_option("--gold", o.gold, "gold wordlist")->required();
  evaluate->add_option("--output", o.output, "report file (default stdout)");
  evaluate->add_flag("--json", o.json, "JSON instead of a table");
  evaluate->add_flag("--per-concept", o.per_concept, "average per-concept scores within each family");
  evaluate->add_option("--log-level", o.log_level, "debug, info, warn, error or off");

  auto* split = app.add_subcommand("split", "move a share of test concepts into training, per fold");
  split->add_option("--input", o.input, "training wordlist")->required();
  split->add_option("--test", o.test, "test wordlist")->required();
  split->add_option("--output", o.output, "directory receiving fold_k/{train,test}.tsv")->required();
  split->add_option("--proportion", o.proportion, "share of each test family's concepts")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  split->add_option("--folds", o.folds, "number of folds")->capture_default_str()->check(CLI::PositiveNumber);
  split->add_option("--seed", o.seed, "random seed")->capture_default_str();
  split->add_option("--log-level", o.log_level, "debug, info, warn, error or off");

  auto* demo = app.add_subcommand("demo", "train and evaluate on the synthetic dataset");
  demo->add_option("--input", o.input, "directory with train.tsv and test.tsv (default: generated)");
  demo->add_option("--checkpoint", o.checkpoint, "also save the trained checkpoint");
  demo->add_option("--threshold", o.threshold, "override the swept threshold")->check(threshold_check);
  demo->add_flag("--json", o.json, "JSON instead of a table");
  demo->add_flag("--per-concept", o.per_concept, "average per-concept scores within each family");
  add_training(demo);
  add_common(demo);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kExitUsage;
  }

  try {
    set_log_level(parse_log_level(o.log_level));
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (align->parsed()) return cmd_align(o, out);
    if (train_cmd->parsed()) return cmd_train(o, out);
    if (predict->parsed()) return cmd_predict(o, out);
    if (evaluate->parsed()) return cmd_evaluate(o, out);
    if (split->parsed()) return cmd_split(o, out);
    if (demo->parsed()) return cmd_demo(o, out);
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace cognate::cli
