// phonerr/simulate.cc

#include "phonerr/simulate.h"

#include <algorithm>
#include <fstream>
#include <istream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace phonerr {

namespace {

// std::mt19937_64 output is bit-exact across implementations; the helpers
// below avoid std::uniform_*_distribution, whose mapping is not.
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return splitmix64(base ^ (0x9E3779B97F4A7C15ULL * (index + 1)));
}

double uniform_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
}

// Uniform in [0, n) by rejection; n <= 1 consumes no randomness.
std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t draw;
  do {
    draw = rng();
  } while (draw >= limit);
  return static_cast<std::size_t>(draw % n);
}

bool mode_admits(SubstitutionMode mode, PairClass cls) {
  switch (mode) {
    case SubstitutionMode::Vowel:
      return cls == PairClass::Vowel;
    case SubstitutionMode::Consonant:
      return cls == PairClass::Consonant;
    case SubstitutionMode::All:
      return true;
  }
  return false;
}

}  // namespace

std::vector<SubstitutionPair> default_pairs() {
  using enum PairClass;
  return {
      {"AA", "IY", Vowel},    {"AE", "UW", Vowel},   {"AA", "IH", Vowel},
      {"OW", "EH", Vowel},    {"AO", "EH", Vowel},   {"UH", "ER", Vowel},
      {"AH", "IY", Vowel},    {"ER", "OW", Vowel},   {"AH", "AE", Vowel},
      {"P", "G", Consonant},  {"T", "ZH", Consonant}, {"K", "B", Consonant},
      {"M", "S", Consonant},  {"N", "SH", Consonant}, {"NG", "F", Consonant},
      {"L", "T", Consonant},  {"R", "D", Consonant},  {"W", "K", Consonant},
      {"TH", "V", Consonant}, {"DH", "Z", Consonant}, {"SH", "HH", Consonant},
  };
}

void validate_pairs(std::span<const SubstitutionPair> pairs,
                    const PhonemeInventory& inventory, const FeatureTable& features) {
  for (const SubstitutionPair& pair : pairs) {
    if (pair.a == pair.b) {
      throw std::invalid_argument("substitution pair (" + pair.a + ", " + pair.b +
                                  ") maps a phoneme to itself");
    }
    const int a = inventory.id_of(pair.a);
    const int b = inventory.id_of(pair.b);
    const bool want_vowel = pair.cls == PairClass::Vowel;
    if (features.of(a).is_vowel != want_vowel || features.of(b).is_vowel != want_vowel) {
      throw std::invalid_argument("substitution pair (" + pair.a + ", " + pair.b +
                                  ") is declared " +
                                  (want_vowel ? "vowel" : "consonant") +
                                  " but its phonemes disagree");
    }
  }
}

std::vector<SubstitutionPair> parse_pairs(std::istream& in,
                                          const PhonemeInventory& inventory,
                                          const FeatureTable& features) {
  std::vector<SubstitutionPair> pairs;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string a, b, cls;
    fields >> a >> b >> cls;
    if (a.empty() || b.empty() || cls.empty()) {
      throw std::runtime_error("pair file line " + std::to_string(line_no) +
                               ": expected 'a b class'");
    }
    if (!header_seen) {
      if (a != "a" || b != "b" || cls != "class") {
        throw std::runtime_error("pair file line " + std::to_string(line_no) +
                                 ": bad header, expected 'a\tb\tclass'");
      }
      header_seen = true;
      continue;
    }
    PairClass pair_class;
    if (cls == "vowel") {
      pair_class = PairClass::Vowel;
    } else if (cls == "consonant") {
      pair_class = PairClass::Consonant;
    } else {
      throw std::runtime_error("pair file line " + std::to_string(line_no) +
                               ": class must be 'vowel' or 'consonant', got '" + cls +
                               "'");
    }
    pairs.push_back({std::move(a), std::move(b), pair_class});
  }
  if (pairs.empty()) {
    throw std::runtime_error("pair file defines no substitution pairs");
  }
  validate_pairs(pairs, inventory, features);
  return pairs;
}

std::vector<SubstitutionPair> load_pairs(const std::string& path,
                                         const PhonemeInventory& inventory,
                                         const FeatureTable& features) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open pair file '" + path + "'");
  }
  return parse_pairs(in, inventory, features);
}

SimRecord inject(const std::string& word, std::span<const std::string> pronunciation,
                 std::span<const SubstitutionPair> pairs, const InjectPolicy& policy,
                 std::uint64_t seed) {
  if (pronunciation.empty()) {
    throw std::invalid_argument("cannot inject into an empty pronunciation");
  }
  if (policy.max_subs < 1) {
    throw std::invalid_argument("max_subs must be positive");
  }
  if (!(policy.rate >= 0.0 && policy.rate <= 1.0)) {
    throw std::invalid_argument("rate must be a probability in [0, 1]");
  }

  SimRecord record;
  record.word = word;
  record.reference.assign(pronunciation.begin(), pronunciation.end());
  record.modified = record.reference;
  record.seed = seed;

  std::mt19937_64 rng(seed);

  // Substitution partners per position: the other side of every mode-eligible
  // pair containing the position's phoneme, in pair-list order.
  std::vector<std::vector<const std::string*>> partners(pronunciation.size());
  for (std::size_t p = 0; p < pronunciation.size(); ++p) {
    for (const SubstitutionPair& pair : pairs) {
      if (!mode_admits(policy.mode, pair.cls)) continue;
      if (pronunciation[p] == pair.a) {
        partners[p].push_back(&pair.b);
      } else if (pronunciation[p] == pair.b) {
        partners[p].push_back(&pair.a);
      }
    }
  }

  std::vector<std::size_t> selected;
  for (std::size_t p = 0; p < pronunciation.size(); ++p) {
    if (partners[p].empty()) continue;
    if (uniform_unit(rng) < policy.rate) selected.push_back(p);
  }

  if (static_cast<int>(selected.size()) > policy.max_subs) {
    // Seeded Fisher-Yates, then keep the first max_subs positions.
    for (std::size_t i = selected.size() - 1; i > 0; --i) {
      std::swap(selected[i], selected[uniform_index(rng, i + 1)]);
    }
    selected.resize(policy.max_subs);
    std::sort(selected.begin(), selected.end());
  }

  for (std::size_t p : selected) {
    const std::string& to = *partners[p][uniform_index(rng, partners[p].size())];
    record.edits.push_back(
        {static_cast<int>(p), record.reference[p], to});
    record.modified[p] = to;
  }
  return record;
}

std::vector<std::string> apply_edits(std::span<const std::string> reference,
                                     std::span<const PhonemeEdit> edits) {
  std::vector<std::string> result(reference.begin(), reference.end());
  for (const PhonemeEdit& edit : edits) {
    if (edit.position < 0 || edit.position >= static_cast<int>(result.size())) {
      throw std::invalid_argument("edit position " + std::to_string(edit.position) +
                                  " out of range");
    }
    if (result[edit.position] != edit.from) {
      throw std::invalid_argument("edit at position " + std::to_string(edit.position) +
                                  " expects '" + edit.from + "' but found '" +
                                  result[edit.position] + "'");
    }
    result[edit.position] = edit.to;
  }
  return result;
}

std::string pair_key(const std::string& a, const std::string& b) {
  return a < b ? a + "~" + b : b + "~" + a;
}

void generate_corpus(std::span<const std::string> words, const Lexicon& lexicon,
                     std::span<const SubstitutionPair> pairs, const InjectPolicy& policy,
                     std::uint64_t seed, const std::function<void(const SimRecord&)>& sink,
                     CorpusStats* stats) {
  if (words.empty()) {
    throw std::invalid_argument("corpus generation needs at least one word");
  }
  for (std::size_t index = 0; index < words.size(); ++index) {
    auto entry = lexicon.entries.find(words[index]);
    if (entry == lexicon.entries.end() || entry->second.empty()) {
      if (stats != nullptr) ++stats->words_skipped;
      continue;
    }
    const std::vector<std::string>& pronunciation = entry->second.front();
    SimRecord record = inject(words[index], pronunciation, pairs, policy,
                              derive_seed(seed, index));
    if (stats != nullptr) {
      ++stats->records;
      stats->total_edits += static_cast<std::int64_t>(record.edits.size());
      for (const PhonemeEdit& edit : record.edits) {
        ++stats->pair_counts[pair_key(edit.from, edit.to)];
      }
    }
    sink(record);
  }
}

std::vector<SimRecord> generate_corpus(std::span<const std::string> words,
                                       const Lexicon& lexicon,
                                       std::span<const SubstitutionPair> pairs,
                                       const InjectPolicy& policy, std::uint64_t seed,
                                       CorpusStats* stats) {
  std::vector<SimRecord> records;
  generate_corpus(words, lexicon, pairs, policy, seed,
                  [&records](const SimRecord& r) { records.push_back(r); }, stats);
  return records;
}

std::vector<SimRecord> generate_corpus(const Lexicon& lexicon,
                                       std::span<const SubstitutionPair> pairs,
                                       const InjectPolicy& policy, std::uint64_t seed,
                                       CorpusStats* stats) {
  std::vector<std::string> words;
  words.reserve(lexicon.entries.size());
  for (const auto& [word, variants] : lexicon.entries) words.push_back(word);
  return generate_corpus(words, lexicon, pairs, policy, seed, stats);
}

}  // namespace phonerr
