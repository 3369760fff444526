// phonerr/simulate.h
//
// Text-level mispronunciation simulation: injects phoneme substitutions from
// a configured pair set into lexicon pronunciations and emits labeled,
// replayable records. Generation is deterministic given the seed.

#ifndef PHONERR_SIMULATE_H_
#define PHONERR_SIMULATE_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "phonerr/inventory.h"

namespace phonerr {

enum class PairClass { Vowel, Consonant };

// An unordered substitution pair; injection may rewrite a -> b or b -> a.
struct SubstitutionPair {
  std::string a;
  std::string b;
  PairClass cls;

  bool operator==(const SubstitutionPair&) const = default;
};

// The built-in pair set: 9 vowel-to-vowel and 12 consonant-to-consonant
// substitutions (21 pairs).
std::vector<SubstitutionPair> default_pairs();

// TSV with columns a, b, class ("vowel"|"consonant"); '#' comments allowed.
std::vector<SubstitutionPair> parse_pairs(std::istream& in,
                                          const PhonemeInventory& inventory,
                                          const FeatureTable& features);
std::vector<SubstitutionPair> load_pairs(const std::string& path,
                                         const PhonemeInventory& inventory,
                                         const FeatureTable& features);

// Checks a != b, membership in the inventory, and class consistency with the
// feature table. Throws on the first violation.
void validate_pairs(std::span<const SubstitutionPair> pairs,
                    const PhonemeInventory& inventory,
                    const FeatureTable& features);

enum class SubstitutionMode { Vowel, Consonant, All };

struct InjectPolicy {
  SubstitutionMode mode = SubstitutionMode::All;
  int max_subs = 1;   // per-word cap; kUnlimitedSubs removes the cap
  double rate = 1.0;  // independent per-position substitution probability
};

inline constexpr int kUnlimitedSubs = std::numeric_limits<int>::max();

struct PhonemeEdit {
  int position = 0;
  std::string from;
  std::string to;

  bool operator==(const PhonemeEdit&) const = default;
};

struct SimRecord {
  std::string word;
  std::vector<std::string> reference;
  std::vector<std::string> modified;
  std::vector<PhonemeEdit> edits;
  std::uint64_t seed = 0;
};

// Substitution-only rewrite of one pronunciation. Every position whose
// phoneme occurs in a mode-eligible pair is substituted independently with
// probability rate; when more than max_subs positions are drawn, a seeded
// shuffle picks which ones keep their edit. Deterministic given the seed.
SimRecord inject(const std::string& word, std::span<const std::string> pronunciation,
                 std::span<const SubstitutionPair> pairs, const InjectPolicy& policy,
                 std::uint64_t seed);

// Applies edits to the reference; inverse_edits(record) swaps from/to so the
// same function replays modified back to reference.
std::vector<std::string> apply_edits(std::span<const std::string> reference,
                                     std::span<const PhonemeEdit> edits);

struct CorpusStats {
  std::map<std::string, std::int64_t> pair_counts;  // canonical "A~B" keys
  std::int64_t total_edits = 0;
  std::int64_t records = 0;
  std::int64_t words_skipped = 0;  // not found in the lexicon
};

// Canonical stats key for an edit in either direction.
std::string pair_key(const std::string& a, const std::string& b);

// One record per word occurrence, pronounced with the word's first lexicon
// variant; unresolvable words are counted and skipped. Per-record seeds are
// derived from (seed, occurrence index), so sharded generation stays
// deterministic.
void generate_corpus(std::span<const std::string> words, const Lexicon& lexicon,
                     std::span<const SubstitutionPair> pairs, const InjectPolicy& policy,
                     std::uint64_t seed, const std::function<void(const SimRecord&)>& sink,
                     CorpusStats* stats = nullptr);

std::vector<SimRecord> generate_corpus(std::span<const std::string> words,
                                       const Lexicon& lexicon,
                                       std::span<const SubstitutionPair> pairs,
                                       const InjectPolicy& policy, std::uint64_t seed,
                                       CorpusStats* stats = nullptr);

// Every lexicon word once, in lexicon order.
std::vector<SimRecord> generate_corpus(const Lexicon& lexicon,
                                       std::span<const SubstitutionPair> pairs,
                                       const InjectPolicy& policy, std::uint64_t seed,
                                       CorpusStats* stats = nullptr);

}  // namespace phonerr

#endif  // PHONERR_SIMULATE_H_
