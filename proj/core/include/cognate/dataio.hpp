#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cognate/msa.hpp"

namespace cognate {

struct WordRecord {
  std::int64_t id = 0;
  std::string family;
  std::string language;
  std::string concept_name;
  Word tokens;
  std::string cogid;                // opaque, compared by equality within a concept
  std::vector<std::string> extra;   // values of Wordlist::extra_columns
};

struct Wordlist {
  // Column order as read; save_wordlist writes the same order.
  std::vector<std::string> columns = {"ID", "FAMILY", "DOCULECT", "CONCEPT", "TOKENS", "COGID"};
  std::vector<std::string> extra_columns;
  std::vector<WordRecord> rows;

  // Families in order of first appearance.
  std::vector<std::string> families() const;
  // Sorted, unique.
  std::vector<std::string> languages() const;

  // Appends an extra column (empty for existing rows) and returns its index
  // in `extra`; returns the existing index if present.
  std::size_t ensure_extra_column(const std::string& name);
  std::size_t extra_index(std::string_view name) const;  // npos if absent
};

struct LoadOptions {
  // Used when the file has no FAMILY column.
  std::string default_family;
  bool require_cogid = true;
};

// Tab-separated, header row first. Required columns: ID, DOCULECT, CONCEPT,
// TOKENS (space-separated segments), COGID, and FAMILY unless a default is
// given. Other columns are preserved. Throws DataError with source:line.
Wordlist parse_wordlist(std::string_view text, std::string_view source, const LoadOptions& options = {});

// A directory is read as one file per family: every *.tsv inside, sorted by
// name, with the file stem as the default family.
Wordlist load_wordlist(const std::filesystem::path& path, const LoadOptions& options = {});

std::string format_wordlist(const Wordlist& wl);
void save_wordlist(const Wordlist& wl, const std::filesystem::path& path);

struct ConceptGroup {
  std::string family;
  std::string concept_name;
  std::vector<std::size_t> rows;  // indices into Wordlist::rows, file order
};

// Groups by (family, concept) in order of first appearance.
std::vector<ConceptGroup> group_by_concept(const Wordlist& wl);

struct SplitSpec {
  double proportion = 0.0;  // share of each test family's concepts moved to training
  int folds = 5;
  std::uint64_t seed = 0;
};

struct Fold {
  Wordlist train;
  Wordlist test;
};

// Per fold and test family, ceil(p * concepts) concepts move from test to
// train. p = 0 yields a single fold equal to the inputs.
std::vector<Fold> augment_split(const Wordlist& train, const Wordlist& test, const SplitSpec& spec);

// One language per line; blank lines and '#' comments ignored.
std::vector<std::string> load_language_inventory(const std::filesystem::path& path);

// Reads a whole file; throws DataError if it cannot be opened.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace cognate
