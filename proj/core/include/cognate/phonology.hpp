#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cognate/diagnostics.hpp"
#include "cognate/msa.hpp"

namespace cognate {

enum class SoundKind { consonant, vowel, tone, gap };

std::string_view to_string(SoundKind kind);

struct SoundClass {
  char label = '-';
  SoundKind kind = SoundKind::gap;

  auto operator<=>(const SoundClass&) const = default;
};

inline constexpr SoundClass kGapClass{'-', SoundKind::gap};
// Class assigned to segments the table cannot resolve.
inline constexpr SoundClass kFallbackClass{'H', SoundKind::consonant};
// ASJP symbol for segments the table cannot resolve; never enters a vocabulary.
inline constexpr std::string_view kUnknownAsjp = "?";

// Canonical decomposition (NFD). Invalid UTF-8 is returned unchanged.
std::string to_nfd(std::string_view utf8);

// Directory holding asjp_map.tsv and sca_classes.tsv: $COGNATE_DATA_DIR if
// set, else the installed data directory, else the source tree.
std::filesystem::path default_data_dir();

// Immutable IPA lookup tables. All member functions are const and safe to
// call concurrently.
class Phonology {
 public:
  static Phonology load(const std::filesystem::path& data_dir);
  static Phonology from_tables(std::string_view asjp_tsv, std::string_view sca_tsv);

  // Loaded once from default_data_dir().
  static const Phonology& shipped();

  PhonemeToken ipa_to_asjp(const PhonemeToken& token, Warnings* warnings = nullptr) const;
  SoundClass sound_class(const PhonemeToken& token, Warnings* warnings = nullptr) const;
  bool is_vowel(const PhonemeToken& token) const;

  // Maximal runs of vowel tokens become one token; input must be gap-free.
  Word merge_consecutive_vowels(const Word& tokens) const;

  Word to_asjp(const Word& row, Warnings* warnings = nullptr) const;
  Msa to_asjp(const Msa& msa, Warnings* warnings = nullptr) const;

  const std::map<std::string, std::string>& asjp_table() const { return asjp_; }
  const std::map<std::string, SoundClass>& class_table() const { return classes_; }

 private:
  template <typename V>
  const V* resolve(const std::map<std::string, V>& table, const std::string& nfd,
                   bool& via_first_vowel) const;

  std::map<std::string, std::string> asjp_;
  std::map<std::string, SoundClass> classes_;
};

// Integer ids for tokens. Frozen after construction. Layout: PAD, GAP, UNK,
// one "[lang]" token per language (sorted), then surface tokens by
// descending frequency with lexicographic tie-break.
class Vocabulary {
 public:
  static constexpr std::int32_t kPad = 0;
  static constexpr std::int32_t kGap = 1;
  static constexpr std::int32_t kUnk = 2;
  static constexpr std::size_t kDefaultMaxSize = 768;

  Vocabulary() = default;

  // Counts surface tokens over all rows (gaps ignored). Rarest tokens are
  // dropped once the cap is reached; throws if the specials alone overflow.
  static Vocabulary build(const std::vector<Word>& rows, std::vector<std::string> languages,
                          std::size_t max_size = kDefaultMaxSize);

  std::size_t size() const { return id_to_token_.size(); }
  std::size_t max_size() const { return max_size_; }

  std::int32_t id(const PhonemeToken& token) const;
  std::optional<std::int32_t> language_id(std::string_view language) const;
  bool has_language(std::string_view language) const { return language_id(language).has_value(); }
  const std::string& token(std::int32_t id) const;
  std::vector<std::string> languages() const;

  static std::string language_token(std::string_view language);

  nlohmann::json to_json() const;
  static Vocabulary from_json(const nlohmann::json& j);

  bool operator==(const Vocabulary& other) const {
    return id_to_token_ == other.id_to_token_ && max_size_ == other.max_size_;
  }

 private:
  void index();

  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, std::int32_t> token_to_id_;
  std::size_t language_begin_ = 3;
  std::size_t language_end_ = 3;
  std::size_t max_size_ = kDefaultMaxSize;
};

// Row-major r x (c+1) id grid; column 0 holds the language token.
struct TokenGrid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::int32_t> ids;

  std::int32_t at(std::size_t r, std::size_t c) const { return ids[r * cols + c]; }
  std::int32_t& at(std::size_t r, std::size_t c) { return ids[r * cols + c]; }
};

// Throws DataError for a language the vocabulary does not know.
TokenGrid tokenize_msa(const Msa& msa, const std::vector<std::string>& languages,
                       const Vocabulary& vocab);

// Inverse of tokenize_msa for in-vocabulary tokens (language column dropped).
std::vector<std::vector<std::string>> detokenize(const TokenGrid& grid, const Vocabulary& vocab);

}  // namespace cognate
