#include "cognate/phonology.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>

#include <nlohmann/json.hpp>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#ifndef COGNATE_INSTALL_DATA_DIR
#define COGNATE_INSTALL_DATA_DIR ""
#endif
#ifndef COGNATE_SOURCE_DATA_DIR
#define COGNATE_SOURCE_DATA_DIR ""
#endif

namespace cognate {

namespace {

std::vector<std::string> code_points(const std::string& utf8) {
  const auto text = icu::UnicodeString::fromUTF8(utf8);
  std::vector<std::string> out;
  for (int32_t i = 0; i < text.length();) {
    const UChar32 cp = text.char32At(i);
    std::string piece;
    icu::UnicodeString(cp).toUTF8String(piece);
    out.push_back(std::move(piece));
    i += U16_LENGTH(cp);
  }
  return out;
}

bool is_modifier(UChar32 cp) {
  const auto type = u_charType(cp);
  return type == U_NON_SPACING_MARK || type == U_MODIFIER_LETTER || type == U_MODIFIER_SYMBOL ||
         type == U_ENCLOSING_MARK || type == U_COMBINING_SPACING_MARK;
}

std::string strip_modifiers(const std::string& utf8) {
  const auto text = icu::UnicodeString::fromUTF8(utf8);
  icu::UnicodeString kept;
  for (int32_t i = 0; i < text.length();) {
    const UChar32 cp = text.char32At(i);
    if (!is_modifier(cp)) kept.append(cp);
    i += U16_LENGTH(cp);
  }
  std::string out;
  kept.toUTF8String(out);
  return out;
}

// Parses "key<TAB>value[<TAB>...]" rows; '#' comments and the first
// non-comment line (header) are skipped.
std::vector<std::vector<std::string>> read_tsv_rows(std::string_view content,
                                                    std::size_t min_fields,
                                                    std::string_view what) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in{std::string(content)};
  std::string line;
  bool header_seen = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (true) {
      const auto tab = line.find('\t', pos);
      fields.push_back(line.substr(pos, tab == std::string::npos ? std::string::npos : tab - pos));
      if (tab == std::string::npos) break;
      pos = tab + 1;
    }
    if (fields.size() < min_fields || fields[0].empty())
      throw DataError(std::string(what) + ": malformed row at line " + std::to_string(line_no));
    rows.push_back(std::move(fields));
  }
  return rows;
}

SoundKind parse_kind(const std::string& s, std::size_t row) {
  if (s == "consonant") return SoundKind::consonant;
  if (s == "vowel") return SoundKind::vowel;
  if (s == "tone") return SoundKind::tone;
  throw DataError("sca_classes.tsv: unknown kind '" + s + "' in row " + std::to_string(row));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string_view to_string(SoundKind kind) {
  switch (kind) {
    case SoundKind::consonant: return "consonant";
    case SoundKind::vowel: return "vowel";
    case SoundKind::tone: return "tone";
    case SoundKind::gap: return "gap";
  }
  return "?";
}

std::string to_nfd(std::string_view utf8) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfd = icu::Normalizer2::getNFDInstance(status);
  if (U_FAILURE(status)) return std::string(utf8);
  const auto text = icu::UnicodeString::fromUTF8(icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  const icu::UnicodeString normalized = nfd->normalize(text, status);
  if (U_FAILURE(status)) return std::string(utf8);
  std::string out;
  normalized.toUTF8String(out);
  return out;
}

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("COGNATE_DATA_DIR"); env && *env) return env;
  for (const std::filesystem::path& dir : {std::filesystem::path(COGNATE_INSTALL_DATA_DIR),
                                          std::filesystem::path(COGNATE_SOURCE_DATA_DIR)}) {
    if (!dir.empty() && std::filesystem::exists(dir / "sca_classes.tsv")) return dir;
  }
  return std::filesystem::path("data");
}

Phonology Phonology::from_tables(std::string_view asjp_tsv, std::string_view sca_tsv) {
  Phonology p;
  for (const auto& f : read_tsv_rows(asjp_tsv, 2, "asjp_map.tsv"))
    p.asjp_[to_nfd(f[0])] = f[1];
  std::size_t row = 0;
  for (const auto& f : read_tsv_rows(sca_tsv, 3, "sca_classes.tsv")) {
    ++row;
    if (f[1].size() != 1)
      throw DataError("sca_classes.tsv: class label must be one character in row " +
                      std::to_string(row));
    p.classes_[to_nfd(f[0])] = SoundClass{f[1][0], parse_kind(f[2], row)};
  }
  return p;
}

Phonology Phonology::load(const std::filesystem::path& data_dir) {
  return from_tables(read_file(data_dir / "asjp_map.tsv"), read_file(data_dir / "sca_classes.tsv"));
}

const Phonology& Phonology::shipped() {
  static const Phonology instance = load(default_data_dir());
  return instance;
}

template <typename V>
const V* Phonology::resolve(const std::map<std::string, V>& table, const std::string& nfd,
                            bool& via_first_vowel) const {
  via_first_vowel = false;
  if (auto it = table.find(nfd); it != table.end()) return &it->second;
  const std::string base = strip_modifiers(nfd);
  if (base.empty()) return nullptr;
  if (auto it = table.find(base); it != table.end()) return &it->second;

  const auto cps = code_points(base);
  const bool all_vowels = std::all_of(cps.begin(), cps.end(), [&](const std::string& cp) {
    auto it = classes_.find(cp);
    return it != classes_.end() && it->second.kind == SoundKind::vowel;
  });
  if (all_vowels) {
    via_first_vowel = true;
    if (auto it = table.find(cps.front()); it != table.end()) return &it->second;
    return nullptr;
  }
  // Longest known prefix, e.g. "pf" -> "p".
  for (std::size_t n = cps.size() - 1; n >= 1; --n) {
    std::string prefix;
    for (std::size_t i = 0; i < n; ++i) prefix += cps[i];
    if (auto it = table.find(prefix); it != table.end()) return &it->second;
  }
  return nullptr;
}

PhonemeToken Phonology::ipa_to_asjp(const PhonemeToken& token, Warnings* warnings) const {
  if (token.is_gap()) return token;
  bool merged = false;
  if (const auto* hit = resolve(asjp_, to_nfd(token.str()), merged)) return PhonemeToken(*hit);
  (warnings ? *warnings : global_warnings()).add("unknown IPA segment '" + token.str() + "' mapped to " +
                                                 std::string(kUnknownAsjp));
  return PhonemeToken(std::string(kUnknownAsjp));
}

SoundClass Phonology::sound_class(const PhonemeToken& token, Warnings* warnings) const {
  if (token.is_gap()) return kGapClass;
  bool merged = false;
  if (const auto* hit = resolve(classes_, to_nfd(token.str()), merged)) return *hit;
  (warnings ? *warnings : global_warnings()).add("unknown IPA segment '" + token.str() +
                                                 "' assigned fallback class " +
                                                 std::string(1, kFallbackClass.label));
  return kFallbackClass;
}

bool Phonology::is_vowel(const PhonemeToken& token) const {
  if (token.is_gap()) return false;
  bool merged = false;
  const auto* hit = resolve(classes_, to_nfd(token.str()), merged);
  return hit && hit->kind == SoundKind::vowel;
}

Word Phonology::merge_consecutive_vowels(const Word& tokens) const {
  Word out;
  bool prev_vowel = false;
  for (const auto& t : tokens) {
    const bool vowel = is_vowel(t);
    if (vowel && prev_vowel) {
      out.back() = PhonemeToken(out.back().str() + t.str());
    } else {
      out.push_back(t);
    }
    prev_vowel = vowel;
  }
  return out;
}

Word Phonology::to_asjp(const Word& row, Warnings* warnings) const {
  Word out;
  out.reserve(row.size());
  for (const auto& t : row) out.push_back(ipa_to_asjp(t, warnings));
  return out;
}

Msa Phonology::to_asjp(const Msa& msa, Warnings* warnings) const {
  Msa out;
  out.meta = msa.meta;
  for (const auto& row : msa.rows) out.rows.push_back(to_asjp(row, warnings));
  return out;
}

// ---------------------------------------------------------------------------

std::string Vocabulary::language_token(std::string_view language) {
  return "[" + std::string(language) + "]";
}

Vocabulary Vocabulary::build(const std::vector<Word>& rows, std::vector<std::string> languages,
                             std::size_t max_size) {
  std::sort(languages.begin(), languages.end());
  languages.erase(std::unique(languages.begin(), languages.end()), languages.end());
  if (3 + languages.size() > max_size)
    throw DataError("vocabulary cap " + std::to_string(max_size) + " too small for " +
                    std::to_string(languages.size()) + " languages");

  std::map<std::string, std::size_t> counts;
  for (const auto& row : rows)
    for (const auto& t : row)
      if (!t.is_gap() && t.str() != kUnknownAsjp) ++counts[t.str()];

  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  Vocabulary v;
  v.max_size_ = max_size;
  v.id_to_token_ = {"[PAD]", "[GAP]", "[UNK]"};
  v.language_begin_ = v.id_to_token_.size();
  for (const auto& lang : languages) v.id_to_token_.push_back(language_token(lang));
  v.language_end_ = v.id_to_token_.size();
  const std::size_t room = max_size - v.id_to_token_.size();
  if (ranked.size() > room) {
    log(LogLevel::warn, "vocabulary cap reached: " + std::to_string(ranked.size() - room) +
                            " rare tokens map to [UNK]");
    ranked.resize(room);
  }
  for (const auto& [tok, n] : ranked) v.id_to_token_.push_back(tok);
  v.index();
  return v;
}

void Vocabulary::index() {
  token_to_id_.clear();
  for (std::size_t i = 0; i < id_to_token_.size(); ++i)
    token_to_id_.emplace(id_to_token_[i], static_cast<std::int32_t>(i));
}

std::int32_t Vocabulary::id(const PhonemeToken& token) const {
  if (token.is_gap()) return kGap;
  auto it = token_to_id_.find(token.str());
  if (it == token_to_id_.end()) return kUnk;
  const auto i = static_cast<std::size_t>(it->second);
  // Surface tokens never resolve to specials or language ids.
  if (i < language_end_) return kUnk;
  return it->second;
}

std::optional<std::int32_t> Vocabulary::language_id(std::string_view language) const {
  auto it = token_to_id_.find(language_token(language));
  if (it == token_to_id_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::token(std::int32_t id) const {
  return id_to_token_.at(static_cast<std::size_t>(id));
}

std::vector<std::string> Vocabulary::languages() const {
  std::vector<std::string> out;
  for (std::size_t i = language_begin_; i < language_end_; ++i)
    out.push_back(id_to_token_[i].substr(1, id_to_token_[i].size() - 2));
  return out;
}

nlohmann::json Vocabulary::to_json() const {
  return {{"max_size", max_size_},
          {"language_begin", language_begin_},
          {"language_end", language_end_},
          {"tokens", id_to_token_}};
}

Vocabulary Vocabulary::from_json(const nlohmann::json& j) {
  Vocabulary v;
  v.max_size_ = j.at("max_size").get<std::size_t>();
  v.language_begin_ = j.at("language_begin").get<std::size_t>();
  v.language_end_ = j.at("language_end").get<std::size_t>();
  v.id_to_token_ = j.at("tokens").get<std::vector<std::string>>();
  if (v.id_to_token_.size() < 3 || v.language_end_ > v.id_to_token_.size() ||
      v.id_to_token_.size() > v.max_size_)
    throw DataError("malformed vocabulary");
  v.index();
  return v;
}

TokenGrid tokenize_msa(const Msa& msa, const std::vector<std::string>& languages,
                       const Vocabulary& vocab) {
  if (languages.size() != msa.row_count())
    throw DataError("tokenize_msa: " + std::to_string(languages.size()) + " languages for " +
                    std::to_string(msa.row_count()) + " rows");
  TokenGrid grid;
  if (msa.row_count() == 0) return grid;
  grid.rows = msa.row_count();
  grid.cols = msa.column_count() + 1;
  grid.ids.assign(grid.rows * grid.cols, Vocabulary::kPad);
  for (std::size_t r = 0; r < grid.rows; ++r) {
    const auto lang = vocab.language_id(languages[r]);
    if (!lang) throw DataError("language '" + languages[r] + "' is not in the vocabulary");
    grid.at(r, 0) = *lang;
    for (std::size_t c = 0; c + 1 < grid.cols; ++c) grid.at(r, c + 1) = vocab.id(msa.rows[r][c]);
  }
  return grid;
}

std::vector<std::vector<std::string>> detokenize(const TokenGrid& grid, const Vocabulary& vocab) {
  std::vector<std::vector<std::string>> out(grid.rows);
  for (std::size_t r = 0; r < grid.rows; ++r)
    for (std::size_t c = 1; c < grid.cols; ++c) {
      const auto id = grid.at(r, c);
      out[r].push_back(id == Vocabulary::kGap ? std::string(PhonemeToken::kGapSymbol) : vocab.token(id));
    }
  return out;
}

}  // namespace cognate
