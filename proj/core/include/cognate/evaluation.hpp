#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cognate/dataio.hpp"

namespace cognate {

struct BCubed {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Item i belongs to cluster gold[i] and predicted[i]. Labels must already be
// namespaced so that a cluster never spans concepts. Throws
// std::invalid_argument for empty or unequal-length input.
BCubed bcubed(const std::vector<std::string>& gold, const std::vector<std::string>& predicted);

enum class Pooling {
  per_family,   // one B-Cubed over all words of a family
  per_concept,  // B-Cubed per concept, averaged over the family's concepts
};

struct FamilyScore {
  std::string family;
  BCubed score;
  std::size_t words = 0;
  std::size_t concepts = 0;
};

struct EvaluationReport {
  std::vector<FamilyScore> families;  // gold file order
  BCubed mean;                        // unweighted mean over families

  nlohmann::json to_json() const;
  // Fixed-width table, three decimals.
  std::string to_table() const;
};

// Column holding predictions in a predicted wordlist.
inline constexpr const char* kPredictedColumn = "PREDICTED_COGID";

// Joins on word ID. Predicted labels come from PREDICTED_COGID when that
// column exists, otherwise COGID. Throws DataError listing IDs present on
// one side only.
EvaluationReport evaluate_dataset(const Wordlist& gold, const Wordlist& predicted,
                                  Pooling pooling = Pooling::per_family);

// Same scoring for in-memory label vectors aligned with gold.rows.
EvaluationReport evaluate_labels(const Wordlist& gold, const std::vector<std::string>& predicted,
                                 Pooling pooling = Pooling::per_family);

}  // namespace cognate
