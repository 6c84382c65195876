#include "cognate/evaluation.hpp"

#include <cstdio>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "cognate/diagnostics.hpp"

namespace cognate {

BCubed bcubed(const std::vector<std::string>& gold, const std::vector<std::string>& predicted) {
  if (gold.empty()) throw std::invalid_argument("bcubed: no items");
  if (gold.size() != predicted.size()) throw std::invalid_argument("bcubed: label vectors differ in length");
  std::unordered_map<std::string, std::size_t> gold_size, pred_size;
  std::map<std::pair<std::string, std::string>, std::size_t> overlap;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    ++gold_size[gold[i]];
    ++pred_size[predicted[i]];
    ++overlap[{gold[i], predicted[i]}];
  }
  double p = 0.0, r = 0.0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto both = static_cast<double>(overlap[{gold[i], predicted[i]}]);
    p += both / static_cast<double>(pred_size[predicted[i]]);
    r += both / static_cast<double>(gold_size[gold[i]]);
  }
  const auto n = static_cast<double>(gold.size());
  BCubed out{p / n, r / n, 0.0};
  out.f1 = out.precision + out.recall > 0.0 ? 2.0 * out.precision * out.recall / (out.precision + out.recall) : 0.0;
  return out;
}

namespace {

std::string scoped(const WordRecord& r, const std::string& label) {
  // Unit separator keeps the scope unambiguous.
  return r.family + '\x1f' + r.concept_name + '\x1f' + label;
}

}  // namespace

EvaluationReport evaluate_labels(const Wordlist& gold, const std::vector<std::string>& predicted, Pooling pooling) {
  if (predicted.size() != gold.rows.size()) throw std::invalid_argument("evaluate_labels: size mismatch");
  if (gold.rows.empty()) throw DataError("evaluate: gold wordlist is empty");
  EvaluationReport report;
  const auto groups = group_by_concept(gold);
  for (const auto& family : gold.families()) {
    FamilyScore fs;
    fs.family = family;
    std::vector<std::string> g, p;
    BCubed sum;
    for (const auto& group : groups) {
      if (group.family != family) continue;
      ++fs.concepts;
      std::vector<std::string> cg, cp;
      for (auto row : group.rows) {
        cg.push_back(scoped(gold.rows[row], gold.rows[row].cogid));
        cp.push_back(scoped(gold.rows[row], predicted[row]));
      }
      fs.words += cg.size();
      if (pooling == Pooling::per_concept) {
        const BCubed b = bcubed(cg, cp);
        sum.precision += b.precision;
        sum.recall += b.recall;
        sum.f1 += b.f1;
      }
      g.insert(g.end(), cg.begin(), cg.end());
      p.insert(p.end(), cp.begin(), cp.end());
    }
    if (pooling == Pooling::per_family) {
      fs.score = bcubed(g, p);
    } else {
      const auto n = static_cast<double>(fs.concepts);
      fs.score = {sum.precision / n, sum.recall / n, sum.f1 / n};
    }
    report.families.push_back(fs);
  }
  for (const auto& f : report.families) {
    report.mean.precision += f.score.precision;
    report.mean.recall += f.score.recall;
    report.mean.f1 += f.score.f1;
  }
  const auto n = static_cast<double>(report.families.size());
  report.mean = {report.mean.precision / n, report.mean.recall / n, report.mean.f1 / n};
  return report;
}

EvaluationReport evaluate_dataset(const Wordlist& gold, const Wordlist& predicted, Pooling pooling) {
  const std::size_t col = predicted.extra_index(kPredictedColumn);
  std::unordered_map<std::int64_t, const WordRecord*> by_id;
  for (const auto& r : predicted.rows) by_id.emplace(r.id, &r);
  std::vector<std::string> labels;
  std::vector<std::int64_t> missing, unexpected;
  std::unordered_map<std::int64_t, bool> in_gold;
  for (const auto& r : gold.rows) {
    in_gold[r.id] = true;
    const auto it = by_id.find(r.id);
    if (it == by_id.end()) {
      missing.push_back(r.id);
      continue;
    }
    labels.push_back(col == std::string::npos ? it->second->cogid : it->second->extra[col]);
  }
  for (const auto& r : predicted.rows)
    if (!in_gold.contains(r.id)) unexpected.push_back(r.id);
  if (!missing.empty() || !unexpected.empty()) {
    auto list = [](const std::vector<std::int64_t>& ids) {
      std::string s;
      for (std::size_t i = 0; i < ids.size() && i < 20; ++i) s += (i ? ", " : "") + std::to_string(ids[i]);
      if (ids.size() > 20) s += ", ... (" + std::to_string(ids.size()) + " total)";
      return s;
    };
    std::string msg = "evaluate: word IDs do not match";
    if (!missing.empty()) msg += "; missing from predictions: " + list(missing);
    if (!unexpected.empty()) msg += "; not in gold: " + list(unexpected);
    throw DataError(msg);
  }
  return evaluate_labels(gold, labels, pooling);
}

nlohmann::json EvaluationReport::to_json() const {
  auto score = [](const BCubed& b) { return nlohmann::json{{"precision", b.precision}, {"recall", b.recall}, {"f1", b.f1}}; };
  nlohmann::json j;
  j["families"] = nlohmann::json::array();
  for (const auto& f : families) {
    auto row = score(f.score);
    row["family"] = f.family;
    row["words"] = f.words;
    row["concepts"] = f.concepts;
    j["families"].push_back(row);
  }
  j["mean"] = score(mean);
  return j;
}

std::string EvaluationReport::to_table() const {
  std::size_t width = 6;
  for (const auto& f : families) width = std::max(width, f.family.size());
  std::string out;
  char buf[64];
  auto line = [&](const std::string& name, const std::string& p, const std::string& r, const std::string& f) {
    out += name + std::string(width - name.size() + 2, ' ');
    std::snprintf(buf, sizeof buf, "%9s %9s %9s\n", p.c_str(), r.c_str(), f.c_str());
    out += buf;
  };
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return std::string(buf);
  };
  line("family", "precision", "recall", "F");
  for (const auto& f : families) line(f.family, fmt(f.score.precision), fmt(f.score.recall), fmt(f.score.f1));
  line("mean", fmt(mean.precision), fmt(mean.recall), fmt(mean.f1));
  return out;
}

}  // namespace cognate
