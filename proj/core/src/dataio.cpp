#include "cognate/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include "cognate/diagnostics.hpp"
#include "cognate/rng.hpp"

namespace cognate {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

std::string where(std::string_view source, std::size_t line) {
  return std::string(source) + ":" + std::to_string(line);
}

}  // namespace

std::vector<std::string> Wordlist::families() const {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& r : rows)
    if (seen.insert(r.family).second) out.push_back(r.family);
  return out;
}

std::vector<std::string> Wordlist::languages() const {
  std::set<std::string> s;
  for (const auto& r : rows) s.insert(r.language);
  return {s.begin(), s.end()};
}

std::size_t Wordlist::extra_index(std::string_view name) const {
  for (std::size_t i = 0; i < extra_columns.size(); ++i)
    if (extra_columns[i] == name) return i;
  return std::string::npos;
}

std::size_t Wordlist::ensure_extra_column(const std::string& name) {
  if (const auto i = extra_index(name); i != std::string::npos) return i;
  extra_columns.push_back(name);
  columns.push_back(name);
  for (auto& r : rows) r.extra.emplace_back();
  return extra_columns.size() - 1;
}

Wordlist parse_wordlist(std::string_view text, std::string_view source, const LoadOptions& options) {
  Wordlist wl;
  std::size_t line_no = 0, pos = 0;
  bool have_header = false;
  // Column index for each required field, or npos.
  std::size_t c_id = std::string::npos, c_family = c_id, c_lang = c_id, c_concept = c_id, c_tokens = c_id,
              c_cogid = c_id;
  std::vector<std::size_t> extra_pos;
  std::unordered_set<std::int64_t> ids;

  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto fields = split_tabs(line);

    if (!have_header) {
      have_header = true;
      wl.columns.assign(fields.begin(), fields.end());
      std::set<std::string> unique(wl.columns.begin(), wl.columns.end());
      if (unique.size() != wl.columns.size()) throw DataError(where(source, line_no) + ": duplicate column name");
      for (std::size_t i = 0; i < fields.size(); ++i) {
        const auto& f = wl.columns[i];
        if (f == "ID") c_id = i;
        else if (f == "FAMILY") c_family = i;
        else if (f == "DOCULECT") c_lang = i;
        else if (f == "CONCEPT") c_concept = i;
        else if (f == "TOKENS") c_tokens = i;
        else if (f == "COGID") c_cogid = i;
        else {
          wl.extra_columns.push_back(f);
          extra_pos.push_back(i);
        }
      }
      auto need = [&](std::size_t col, const char* name) {
        if (col == std::string::npos) throw DataError(std::string(source) + ": missing required column " + name);
      };
      need(c_id, "ID");
      need(c_lang, "DOCULECT");
      need(c_concept, "CONCEPT");
      need(c_tokens, "TOKENS");
      if (options.require_cogid) need(c_cogid, "COGID");
      if (options.default_family.empty()) need(c_family, "FAMILY");
      continue;
    }

    if (fields.size() != wl.columns.size())
      throw DataError(where(source, line_no) + ": expected " + std::to_string(wl.columns.size()) + " fields, found " +
                      std::to_string(fields.size()));
    WordRecord rec;
    const std::string id_text(fields[c_id]);
    try {
      std::size_t used = 0;
      rec.id = std::stoll(id_text, &used);
      if (used != id_text.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw DataError(where(source, line_no) + ": ID '" + id_text + "' is not an integer");
    }
    if (!ids.insert(rec.id).second) throw DataError(where(source, line_no) + ": duplicate ID " + id_text);
    rec.family = c_family == std::string::npos ? options.default_family : std::string(fields[c_family]);
    rec.language = fields[c_lang];
    rec.concept_name = fields[c_concept];
    if (rec.family.empty() || rec.language.empty() || rec.concept_name.empty())
      throw DataError(where(source, line_no) + ": empty FAMILY, DOCULECT or CONCEPT");
    try {
      rec.tokens = parse_word(fields[c_tokens]);
    } catch (const std::exception& e) {
      throw DataError(where(source, line_no) + ": bad TOKENS: " + e.what());
    }
    if (rec.tokens.empty()) throw DataError(where(source, line_no) + ": empty TOKENS");
    for (const auto& t : rec.tokens)
      if (t.is_gap()) throw DataError(where(source, line_no) + ": TOKENS contains the gap symbol");
    if (c_cogid != std::string::npos) rec.cogid = fields[c_cogid];
    if (options.require_cogid && rec.cogid.empty()) throw DataError(where(source, line_no) + ": empty COGID");
    for (const auto p : extra_pos) rec.extra.emplace_back(fields[p]);
    wl.rows.push_back(std::move(rec));
  }
  if (!have_header) throw DataError(std::string(source) + ": no header row");
  return wl;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

Wordlist load_wordlist(const std::filesystem::path& path, const LoadOptions& options) {
  if (!std::filesystem::is_directory(path)) return parse_wordlist(read_text_file(path), path.string(), options);

  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(path))
    if (entry.is_regular_file() && entry.path().extension() == ".tsv") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError(path.string() + ": no .tsv files in directory");

  Wordlist merged;
  std::unordered_set<std::int64_t> ids;
  for (std::size_t f = 0; f < files.size(); ++f) {
    LoadOptions per_file = options;
    per_file.default_family = files[f].stem().string();
    Wordlist part = parse_wordlist(read_text_file(files[f]), files[f].string(), per_file);
    if (f == 0) {
      merged.columns = part.columns;
      merged.extra_columns = part.extra_columns;
    } else if (part.extra_columns != merged.extra_columns) {
      throw DataError(files[f].string() + ": extra columns differ from " + files[0].string());
    }
    for (auto& r : part.rows) {
      if (!ids.insert(r.id).second)
        throw DataError(files[f].string() + ": ID " + std::to_string(r.id) + " already used in another file");
      merged.rows.push_back(std::move(r));
    }
  }
  // Directory input always gains a FAMILY column on output.
  if (std::find(merged.columns.begin(), merged.columns.end(), "FAMILY") == merged.columns.end())
    merged.columns.insert(merged.columns.begin() + 1, "FAMILY");
  return merged;
}

std::string format_wordlist(const Wordlist& wl) {
  std::string out;
  for (std::size_t i = 0; i < wl.columns.size(); ++i) {
    if (i) out += '\t';
    out += wl.columns[i];
  }
  out += '\n';
  std::vector<std::size_t> extra_of_column(wl.columns.size(), std::string::npos);
  for (std::size_t i = 0; i < wl.columns.size(); ++i) extra_of_column[i] = wl.extra_index(wl.columns[i]);
  for (const auto& r : wl.rows) {
    for (std::size_t i = 0; i < wl.columns.size(); ++i) {
      if (i) out += '\t';
      const auto& c = wl.columns[i];
      if (c == "ID") out += std::to_string(r.id);
      else if (c == "FAMILY") out += r.family;
      else if (c == "DOCULECT") out += r.language;
      else if (c == "CONCEPT") out += r.concept_name;
      else if (c == "TOKENS") out += join_word(r.tokens);
      else if (c == "COGID") out += r.cogid;
      else if (extra_of_column[i] != std::string::npos && extra_of_column[i] < r.extra.size())
        out += r.extra[extra_of_column[i]];
    }
    out += '\n';
  }
  return out;
}

void save_wordlist(const Wordlist& wl, const std::filesystem::path& path) { write_text_file(path, format_wordlist(wl)); }

std::vector<ConceptGroup> group_by_concept(const Wordlist& wl) {
  std::vector<ConceptGroup> groups;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  for (std::size_t i = 0; i < wl.rows.size(); ++i) {
    const auto& r = wl.rows[i];
    auto [it, fresh] = index.try_emplace({r.family, r.concept_name}, groups.size());
    if (fresh) groups.push_back(ConceptGroup{r.family, r.concept_name, {}});
    groups[it->second].rows.push_back(i);
  }
  return groups;
}

std::vector<Fold> augment_split(const Wordlist& train, const Wordlist& test, const SplitSpec& spec) {
  if (spec.proportion < 0.0 || spec.proportion >= 1.0)
    throw std::invalid_argument("augment_split: proportion must lie in [0, 1)");
  if (spec.folds < 1) throw std::invalid_argument("augment_split: folds must be >= 1");
  if (spec.proportion == 0.0) return {Fold{train, test}};

  const auto groups = group_by_concept(test);
  const auto families = test.families();
  std::vector<Fold> folds;
  for (int f = 0; f < spec.folds; ++f) {
    std::vector<bool> moved(test.rows.size(), false);
    for (std::size_t fi = 0; fi < families.size(); ++fi) {
      std::vector<const ConceptGroup*> concepts;
      for (const auto& g : groups)
        if (g.family == families[fi]) concepts.push_back(&g);
      // Guard against 0.125 * 160 landing a hair above 20.
      const auto n = static_cast<std::size_t>(
          std::ceil(spec.proportion * static_cast<double>(concepts.size()) - 1e-9));
      Rng rng = Rng::derive(spec.seed, static_cast<std::uint64_t>(f), fi);
      rng.shuffle(std::span<const ConceptGroup*>(concepts));
      for (std::size_t k = 0; k < n && k < concepts.size(); ++k)
        for (auto row : concepts[k]->rows) moved[row] = true;
    }
    Fold fold{train, test};
    fold.test.rows.clear();
    std::unordered_set<std::int64_t> ids;
    for (const auto& r : train.rows) ids.insert(r.id);
    for (std::size_t i = 0; i < test.rows.size(); ++i) {
      if (!moved[i]) {
        fold.test.rows.push_back(test.rows[i]);
        continue;
      }
      if (!ids.insert(test.rows[i].id).second)
        throw DataError("augment_split: test ID " + std::to_string(test.rows[i].id) + " also occurs in training data");
      WordRecord rec = test.rows[i];
      if (train.extra_columns != test.extra_columns) rec.extra.assign(train.extra_columns.size(), "");
      fold.train.rows.push_back(std::move(rec));
    }
    folds.push_back(std::move(fold));
  }
  return folds;
}

std::vector<std::string> load_language_inventory(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    out.push_back(line.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace cognate
