// phonerr/inventory.h
//
// The phoneme universe: inventory of ARPAbet symbols (plus the trailing CTC
// blank index), the per-phoneme phonological feature table, and CMUdict-style
// lexicon parsing. Everything here is immutable after construction and safe
// for unrestricted concurrent reads.

#ifndef PHONERR_INVENTORY_H_
#define PHONERR_INVENTORY_H_

#include <array>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace phonerr {

// Phonological feature values. NA marks a feature that does not apply to a
// phoneme's class (vowel features on consonants and vice versa).
enum class VowelLength { Short, Long, Diphthong, NA };
enum class VowelHeight { High, Mid, Low, NA };
enum class VowelFrontness { Front, Central, Back, NA };
enum class LipRounding { Rounded, Unrounded, NA };
enum class ConsonantType { Stop, Fricative, Affricate, Nasal, Liquid, Glide, NA };
enum class Place {
  Bilabial, Labiodental, Dental, Alveolar, Postalveolar, Palatal, Velar,
  Glottal, NA
};
enum class Voicing { Voiced, Voiceless, NA };

// The eight features, in the canonical order used by feature weights:
// is_vowel, vowel_length, vowel_height, vowel_frontness, lip_rounding,
// consonant_type, place, voicing.
inline constexpr int kNumFeatures = 8;

struct PhonemeFeatures {
  bool is_vowel = false;
  VowelLength vowel_length = VowelLength::NA;
  VowelHeight vowel_height = VowelHeight::NA;
  VowelFrontness vowel_frontness = VowelFrontness::NA;
  LipRounding lip_rounding = LipRounding::NA;
  ConsonantType consonant_type = ConsonantType::NA;
  Place place = Place::NA;
  Voicing voicing = Voicing::NA;

  bool operator==(const PhonemeFeatures&) const = default;
};

// Integer codes for pairwise feature comparison, in canonical feature order.
// kFeatureNA marks an inapplicable feature; is_vowel is never NA.
inline constexpr int kFeatureNA = -1;
std::array<int, kNumFeatures> feature_codes(const PhonemeFeatures& f);

// Ordered set of phoneme symbols. The CTC blank is not a symbol; it occupies
// the index right after the last phoneme, so probability rows over
// "phonemes plus blank" have a fixed width num_phonemes() + 1.
class PhonemeInventory {
 public:
  // Validates: symbols nonempty, unique, uppercase alphanumeric.
  explicit PhonemeInventory(std::vector<std::string> symbols);

  int num_phonemes() const { return static_cast<int>(symbols_.size()); }
  int blank_id() const { return num_phonemes(); }
  const std::vector<std::string>& symbols() const { return symbols_; }
  const std::string& symbol(int id) const;
  std::optional<int> find(std::string_view symbol) const;
  // Like find() but throws std::invalid_argument naming the symbol.
  int id_of(std::string_view symbol) const;
  bool contains(std::string_view symbol) const { return find(symbol).has_value(); }

  bool operator==(const PhonemeInventory& other) const {
    return symbols_ == other.symbols_;
  }

 private:
  std::vector<std::string> symbols_;
  std::map<std::string, int, std::less<>> index_;
};

// Per-phoneme features, aligned with the owning inventory's symbol order.
// Construction enforces class consistency: vowels carry the four vowel
// features and no consonant features, consonants the reverse.
class FeatureTable {
 public:
  FeatureTable(const PhonemeInventory& inventory,
               std::vector<PhonemeFeatures> features);

  const PhonemeFeatures& of(int id) const;
  int size() const { return static_cast<int>(features_.size()); }

  bool operator==(const FeatureTable&) const = default;

 private:
  std::vector<PhonemeFeatures> features_;
};

struct InventoryLoadResult {
  PhonemeInventory inventory;
  FeatureTable features;
};

// Parses a feature-table TSV (header row; one row per phoneme; "n/a" for
// inapplicable cells; '#' lines are comments). The file defines the
// inventory and its order.
InventoryLoadResult parse_feature_table(std::istream& in);

// Built-in default: the 39 stress-free CMU/ARPAbet phonemes, identical to
// data/phoneme_features.tsv.
InventoryLoadResult load_inventory();
InventoryLoadResult load_inventory(const std::string& path);

// Emits the table in the same TSV format (no comment lines); parseable by
// parse_feature_table and equal to the source after a round trip.
void save_feature_table(const PhonemeInventory& inventory,
                        const FeatureTable& features, std::ostream& out);

// Word -> pronunciation variants, in source order. Words are lowercase;
// pronunciations are nonempty sequences of inventory symbols.
struct Lexicon {
  std::map<std::string, std::vector<std::vector<std::string>>> entries;

  bool operator==(const Lexicon&) const = default;
};

// CMUdict plain-text format: "WORD  PH PH PH" lines, "WORD(2)" alternate
// pronunciations, ";;;" comments. Stress digits 0-2 are stripped from
// phoneme symbols; every resulting symbol must be in the inventory.
Lexicon parse_lexicon(std::istream& in, const PhonemeInventory& inventory);
Lexicon load_lexicon(const std::string& path, const PhonemeInventory& inventory);

// Deterministic text form (sorted words, "(k)" suffixes for variants).
std::string serialize_lexicon(const Lexicon& lexicon);

}  // namespace phonerr

#endif  // PHONERR_INVENTORY_H_
