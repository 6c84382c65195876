#include "cognate/msa.hpp"

#include <algorithm>
#include <stdexcept>

namespace cognate {

PhonemeToken::PhonemeToken(std::string surface) : surface_(std::move(surface)) {
  if (surface_.empty()) throw std::invalid_argument("empty phoneme token");
  const bool has_space = std::any_of(surface_.begin(), surface_.end(), [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
  });
  if (has_space) throw std::invalid_argument("phoneme token contains whitespace: '" + surface_ + "'");
}

Word parse_word(std::string_view text) {
  Word out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && text[pos] == ' ') ++pos;
    std::size_t end = pos;
    while (end < text.size() && text[end] != ' ') ++end;
    if (end > pos) out.emplace_back(std::string(text.substr(pos, end - pos)));
    pos = end;
  }
  return out;
}

std::string join_word(const Word& word, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (i) out += sep;
    out += word[i].str();
  }
  return out;
}

Word strip_gaps(const Word& row) {
  Word out;
  for (const auto& t : row)
    if (!t.is_gap()) out.push_back(t);
  return out;
}

bool Msa::is_rectangular() const {
  return std::all_of(rows.begin(), rows.end(),
                     [&](const Word& r) { return r.size() == column_count(); });
}

bool Msa::has_all_gap_column() const {
  for (std::size_t c = 0; c < column_count(); ++c) {
    bool all_gap = true;
    for (const auto& r : rows) all_gap = all_gap && r[c].is_gap();
    if (all_gap) return true;
  }
  return false;
}

void Msa::drop_all_gap_columns() {
  const std::size_t cols = column_count();
  std::vector<bool> keep(cols, false);
  for (std::size_t c = 0; c < cols; ++c)
    for (const auto& r : rows) keep[c] = keep[c] || !r[c].is_gap();
  for (auto& r : rows) {
    Word kept;
    for (std::size_t c = 0; c < cols; ++c)
      if (keep[c]) kept.push_back(r[c]);
    r = std::move(kept);
  }
}

}  // namespace cognate
