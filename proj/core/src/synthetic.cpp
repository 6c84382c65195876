#include "cognate/synthetic.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

#include "cognate/rng.hpp"

namespace cognate {

const std::vector<std::string>& synthetic_proto_consonants() {
  static const std::vector<std::string> v{"p", "t", "k", "b", "d", "g", "m", "n", "s", "l", "r", "w"};
  return v;
}

const std::vector<std::string>& synthetic_proto_vowels() {
  static const std::vector<std::string> v{"a", "e", "i", "o", "u"};
  return v;
}

const std::vector<std::string>& synthetic_distractor_consonants() {
  // Sound classes absent from the proto inventory and its reflexes.
  static const std::vector<std::string> v{"tʃ", "dʒ", "ts", "θ", "ð", "x", "ɣ", "χ", "j"};
  return v;
}

namespace {

const std::vector<std::string>& reflex_consonants() {
  static const std::vector<std::string> v{"p", "t", "k", "b", "d", "g", "m", "n", "s", "l", "r", "w", "f", "h", "v"};
  return v;
}

template <typename T>
const T& pick(const std::vector<T>& items, Rng& rng) {
  return items[static_cast<std::size_t>(rng.below(items.size()))];
}

using SoundLaw = std::map<std::string, std::string>;

struct Language {
  std::string name;
  SoundLaw sound_law;
  bool drops_final_vowel = false;
};

// Changes each segment's current reflex with probability `rate`. A changed
// segment takes a reflex no other segment maps to, so laws stay injective
// and correspondences recoverable.
void shift(SoundLaw& law, const std::vector<std::string>& segments, const std::vector<std::string>& reflexes,
           double rate, Rng& rng) {
  std::vector<bool> changes;
  std::set<std::string> used;
  for (const auto& seg : segments) {
    changes.push_back(rng.bernoulli(rate));
    if (!changes.back()) used.insert(law.at(seg));
  }
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const std::string current = law.at(segments[i]);
    std::vector<std::string> free;
    for (const auto& r : reflexes)
      if (r != current && !used.contains(r)) free.push_back(r);
    const std::string out = changes[i] && !free.empty() ? pick(free, rng) : current;
    used.insert(out);
    law[segments[i]] = out;
  }
}

SoundLaw identity_law() {
  SoundLaw law;
  for (const auto* inv : {&synthetic_proto_consonants(), &synthetic_proto_vowels()})
    for (const auto& seg : *inv) law[seg] = seg;
  return law;
}

SoundLaw subgroup_law(const SyntheticSpec& spec, Rng& rng) {
  SoundLaw law = identity_law();
  shift(law, synthetic_proto_consonants(), reflex_consonants(), spec.consonant_change, rng);
  shift(law, synthetic_proto_vowels(), synthetic_proto_vowels(), spec.vowel_change, rng);
  return law;
}

Language make_language(std::string name, const SoundLaw& subgroup, const SyntheticSpec& spec, Rng& rng) {
  Language lang{std::move(name), subgroup, rng.bernoulli(spec.final_loss)};
  shift(lang.sound_law, synthetic_proto_consonants(), reflex_consonants(), spec.individual_change, rng);
  shift(lang.sound_law, synthetic_proto_vowels(), synthetic_proto_vowels(), spec.individual_change, rng);
  return lang;
}

// (C)V(C)V(C)V with 2 or 3 syllables, optional closing consonant.
std::vector<std::string> make_form(const std::vector<std::string>& consonants, Rng& rng) {
  std::vector<std::string> form;
  const int syllables = 2 + static_cast<int>(rng.below(2));
  for (int s = 0; s < syllables; ++s) {
    form.push_back(pick(consonants, rng));
    form.push_back(pick(synthetic_proto_vowels(), rng));
  }
  if (rng.bernoulli(0.4)) form.push_back(pick(consonants, rng));
  return form;
}

// True if the forms share a consonant at the same position.
bool shares_consonant(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  const auto& vowels = synthetic_proto_vowels();
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i)
    if (a[i] == b[i] && std::find(vowels.begin(), vowels.end(), a[i]) == vowels.end()) return true;
  return false;
}

Word reflex(const std::vector<std::string>& proto, const Language& lang) {
  std::vector<std::string> out;
  for (const auto& seg : proto) out.push_back(lang.sound_law.at(seg));
  const auto& vowels = synthetic_proto_vowels();
  if (lang.drops_final_vowel && out.size() > 2 &&
      std::find(vowels.begin(), vowels.end(), proto.back()) != vowels.end())
    out.pop_back();
  Word w;
  for (auto& s : out) w.emplace_back(std::move(s));
  return w;
}

Word to_word(const std::vector<std::string>& segs) {
  Word w;
  for (const auto& s : segs) w.emplace_back(s);
  return w;
}

}  // namespace

SyntheticData make_synthetic(const SyntheticSpec& spec) {
  if (spec.families < 1 || spec.concepts < 1 || spec.languages < 1 || spec.max_sets < 1 || spec.subgroups < 1 ||
      spec.subgroups > spec.languages)
    throw std::invalid_argument("make_synthetic: sizes must be >= 1");
  if (spec.test_concepts < 0 || spec.test_concepts > spec.concepts)
    throw std::invalid_argument("make_synthetic: test_concepts out of range");

  static const char* kFamilyNames[] = {"Northern", "Southern", "Eastern", "Western", "Central", "Insular"};
  SyntheticData data;
  const std::vector<std::string> columns{"ID", "FAMILY", "DOCULECT", "CONCEPT", "TOKENS", "COGID"};
  data.train.columns = columns;
  data.test.columns = columns;
  std::int64_t next_id = 1;

  for (int f = 0; f < spec.families; ++f) {
    const std::string family = f < 6 ? kFamilyNames[f] : "Family" + std::to_string(f + 1);
    Rng lang_rng = Rng::derive(spec.seed, 1, static_cast<std::uint64_t>(f));
    std::vector<SoundLaw> subgroups;
    for (int g = 0; g < spec.subgroups; ++g) subgroups.push_back(subgroup_law(spec, lang_rng));
    std::vector<Language> langs;
    for (int l = 0; l < spec.languages; ++l) {
      // Consecutive languages share a subgroup.
      const auto& subgroup = subgroups[static_cast<std::size_t>(l * spec.subgroups / spec.languages)];
      langs.push_back(make_language(family.substr(0, 3) + std::to_string(l + 1), subgroup, spec, lang_rng));
      data.languages.push_back(langs.back().name);
    }

    Rng pick_rng = Rng::derive(spec.seed, 2, static_cast<std::uint64_t>(f));
    std::vector<int> order(static_cast<std::size_t>(spec.concepts));
    for (int c = 0; c < spec.concepts; ++c) order[static_cast<std::size_t>(c)] = c;
    pick_rng.shuffle(std::span<int>(order));
    std::vector<bool> is_test(static_cast<std::size_t>(spec.concepts), false);
    for (int k = 0; k < spec.test_concepts; ++k) is_test[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = true;

    for (int c = 0; c < spec.concepts; ++c) {
      Rng rng = Rng::derive(spec.seed, 3, static_cast<std::uint64_t>(f) * 100003u + static_cast<std::uint64_t>(c));
      const std::string concept_name = "concept" + std::to_string(c + 1);
      const int sets = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.max_sets)));
      std::vector<std::vector<std::string>> protos;
      // Sets of one concept never share a consonant slot, so that unrelated
      // sets are not accidentally similar.
      while (static_cast<int>(protos.size()) < sets) {
        auto form = make_form(synthetic_proto_consonants(), rng);
        if (std::none_of(protos.begin(), protos.end(), [&](const auto& p) { return shares_consonant(p, form); }))
          protos.push_back(std::move(form));
      }
      int distractors = 0;
      Wordlist& target = is_test[static_cast<std::size_t>(c)] ? data.test : data.train;
      for (const auto& lang : langs) {
        WordRecord rec;
        rec.id = next_id++;
        rec.family = family;
        rec.language = lang.name;
        rec.concept_name = concept_name;
        const int set = static_cast<int>(rng.below(static_cast<std::uint64_t>(sets)));
        if (rng.bernoulli(spec.distractor_rate)) {
          rec.tokens = to_word(make_form(synthetic_distractor_consonants(), rng));
          rec.cogid = std::to_string(100 + ++distractors);
        } else {
          rec.tokens = reflex(protos[static_cast<std::size_t>(set)], lang);
          rec.cogid = std::to_string(set + 1);
        }
        target.rows.push_back(std::move(rec));
      }
    }
  }
  return data;
}

}  // namespace cognate
