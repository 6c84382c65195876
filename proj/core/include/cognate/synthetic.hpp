#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cognate/dataio.hpp"

namespace cognate {

// Toy language families: each concept has one to `max_sets` cognate sets,
// each with a random proto-form; every language derives its word by applying
// its own fixed segment substitutions to the proto-form of its set. The
// substitutions of a language are those of its subgroup plus a few of its
// own. A fraction of words are replaced by distractors built from consonants
// that never occur in inherited words; each distractor is its own cognate set.
struct SyntheticSpec {
  int families = 2;
  int concepts = 30;       // per family
  int languages = 8;       // per family
  int test_concepts = 10;  // per family, held out
  int max_sets = 2;
  int subgroups = 2;              // per family, over consecutive languages
  double consonant_change = 0.5;  // chance a subgroup changes a proto consonant
  double vowel_change = 0.3;      // same for vowels
  double individual_change = 0.1; // further chance per language and segment
  double final_loss = 0.3;        // chance a language drops word-final vowels
  double distractor_rate = 0.15;
  std::uint64_t seed = 2024;
};

struct SyntheticData {
  Wordlist train;
  Wordlist test;
  // Every language of both splits, for the vocabulary.
  std::vector<std::string> languages;
};

SyntheticData make_synthetic(const SyntheticSpec& spec = {});

// Segment inventories used by the generator.
const std::vector<std::string>& synthetic_proto_consonants();
const std::vector<std::string>& synthetic_proto_vowels();
const std::vector<std::string>& synthetic_distractor_consonants();

}  // namespace cognate
