#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace cognate {

// One segment of a transcribed word. May span several code points (an
// affricate, a segment with diacritics, or a merged vowel cluster). The gap
// symbol "-" is a distinguished token.
class PhonemeToken {
 public:
  static constexpr std::string_view kGapSymbol = "-";

  // Throws std::invalid_argument on empty input or embedded whitespace.
  explicit PhonemeToken(std::string surface);

  static PhonemeToken gap() { return PhonemeToken(std::string(kGapSymbol)); }

  const std::string& str() const { return surface_; }
  bool is_gap() const { return surface_ == kGapSymbol; }

  auto operator<=>(const PhonemeToken&) const = default;

 private:
  std::string surface_;
};

using Word = std::vector<PhonemeToken>;

// Splits on ASCII spaces; empty result for a blank string.
Word parse_word(std::string_view space_separated);
std::string join_word(const Word& word, std::string_view sep = " ");
Word strip_gaps(const Word& row);

struct MsaRowMeta {
  std::int64_t word_id = 0;
  std::string language;
};

// Rectangular alignment: rows are words of one concept, columns aligned
// positions. meta is either empty or has one entry per row.
struct Msa {
  std::vector<Word> rows;
  std::vector<MsaRowMeta> meta;

  std::size_t row_count() const { return rows.size(); }
  std::size_t column_count() const { return rows.empty() ? 0 : rows.front().size(); }

  bool is_rectangular() const;
  bool has_all_gap_column() const;
  void drop_all_gap_columns();
};

}  // namespace cognate
