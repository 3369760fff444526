// phonerr/inventory.cc

#include "phonerr/inventory.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace phonerr {

namespace {

// Embedded copy of data/phoneme_features.tsv (comment lines dropped). The
// default table ships as data so it stays auditable and overridable; this
// string goes through the same parser as external files.
constexpr const char* kDefaultFeatureTableTsv =
    "phoneme\tis_vowel\tvowel_length\tvowel_height\tvowel_frontness\tlip_rounding\tconsonant_type\tplace\tvoicing\n"
    "AA\ttrue\tlong\tlow\tback\tunrounded\tn/a\tn/a\tn/a\n"
    "AE\ttrue\tshort\tlow\tfront\tunrounded\tn/a\tn/a\tn/a\n"
    "AH\ttrue\tshort\tmid\tcentral\tunrounded\tn/a\tn/a\tn/a\n"
    "AO\ttrue\tlong\tlow\tback\trounded\tn/a\tn/a\tn/a\n"
    "AW\ttrue\tdiphthong\tlow\tcentral\trounded\tn/a\tn/a\tn/a\n"
    "AY\ttrue\tdiphthong\tlow\tcentral\tunrounded\tn/a\tn/a\tn/a\n"
    "B\tfalse\tn/a\tn/a\tn/a\tn/a\tstop\tbilabial\tvoiced\n"
    "CH\tfalse\tn/a\tn/a\tn/a\tn/a\taffricate\tpostalveolar\tvoiceless\n"
    "D\tfalse\tn/a\tn/a\tn/a\tn/a\tstop\talveolar\tvoiced\n"
    "DH\tfalse\tn/a\tn/a\tn/a\tn/a\tfricative\tdental\tvoiced\n"
    "EH\ttrue\tshort\tmid\tfront\tunrounded\tn/a\tn/a\tn/a\n"
    "ER\ttrue\tlong\tmid\tcentral\tunrounded\tn/a\tn/a\tn/a\n"
    "EY\ttrue\tlong\tmid\tfront\tunrounded\tn/a\tn/a\tn/a\n"
    "F\tfalse\tn/a\tn/a\tn/a\tn/a\tfricative\tlabiodental\tvoiceless\n"
    "G\tfalse\tn/a\tn/a\tn/a\tn/a\tstop\tvelar\tvoiced\n"
    "HH\tfalse\tn/a\tn/a\tn/a\tn/a\tfricative\tglottal\tvoiceless\n"
    "IH\ttrue\tshort\thigh\tfront\tunrounded\tn/a\tn/a\tn/a\n"
    "IY\ttrue\tlong\thigh\tfront\tunrounded\tn/a\tn/a\tn/a\n"
    "JH\tfalse\tn/a\tn/a\tn/a\tn/a\taffricate\tpostalveolar\tvoiced\n"
    "K\tfalse\tn/a\tn/a\tn/a\tn/a\tstop\tvelar\tvoiceless\n"
    "L\tfalse\tn/a\tn/a\tn/a\tn/a\tliquid\talveolar\tvoiced\n"
    "M\tfalse\tn/a\tn/a\tn/a\tn/a\tnasal\tbilabial\tvoiced\n"
    "N\tfalse\tn/a\tn/a\tn/a\tn/a\tnasal\talveolar\tvoiced\n"
    "NG\tfalse\tn/a\tn/a\tn/a\tn/a\tnasal\tvelar\tvoiced\n"
    "OW\ttrue\tlong\tmid\tback\trounded\tn/a\tn/a\tn/a\n"
    "OY\ttrue\tdiphthong\tmid\tback\trounded\tn/a\tn/a\tn/a\n"
    "P\tfalse\tn/a\tn/a\tn/a\tn/a\tstop\tbilabial\tvoiceless\n"
    "R\tfalse\tn/a\tn/a\tn/a\tn/a\tliquid\tpostalveolar\tvoiced\n"
    "S\tfalse\tn/a\tn/a\tn/a\tn/a\tfricative\talveolar\tvoiceless\n"
    "SH\tfalse\tn/a\tn/a\tn/a\tn/a\tfricative\tpostalveolar\tvoiceless\n"
    "T\tfalse\tn/a\tn/a\tn/a\tn/a\tstop\talveolar\tvoiceless\n"
    "TH\tfalse\tn/a\tn/a\tn/a\tn/a\tfricative\tdental\tvoiceless\n"
    "UH\ttrue\tshort\thigh\tback\trounded\tn/a\tn/a\tn/a\n"
    "UW\ttrue\tlong\thigh\tback\trounded\tn/a\tn/a\tn/a\n"
    "V\tfalse\tn/a\tn/a\tn/a\tn/a\tfricative\tlabiodental\tvoiced\n"
    "W\tfalse\tn/a\tn/a\tn/a\tn/a\tglide\tbilabial\tvoiced\n"
    "Y\tfalse\tn/a\tn/a\tn/a\tn/a\tglide\tpalatal\tvoiced\n"
    "Z\tfalse\tn/a\tn/a\tn/a\tn/a\tfricative\talveolar\tvoiced\n"
    "ZH\tfalse\tn/a\tn/a\tn/a\tn/a\tfricative\tpostalveolar\tvoiced\n";

template <typename Enum>
struct EnumName {
  Enum value;
  const char* name;
};

constexpr EnumName<VowelLength> kVowelLengthNames[] = {
    {VowelLength::Short, "short"},
    {VowelLength::Long, "long"},
    {VowelLength::Diphthong, "diphthong"},
    {VowelLength::NA, "n/a"},
};
constexpr EnumName<VowelHeight> kVowelHeightNames[] = {
    {VowelHeight::High, "high"},
    {VowelHeight::Mid, "mid"},
    {VowelHeight::Low, "low"},
    {VowelHeight::NA, "n/a"},
};
constexpr EnumName<VowelFrontness> kVowelFrontnessNames[] = {
    {VowelFrontness::Front, "front"},
    {VowelFrontness::Central, "central"},
    {VowelFrontness::Back, "back"},
    {VowelFrontness::NA, "n/a"},
};
constexpr EnumName<LipRounding> kLipRoundingNames[] = {
    {LipRounding::Rounded, "rounded"},
    {LipRounding::Unrounded, "unrounded"},
    {LipRounding::NA, "n/a"},
};
constexpr EnumName<ConsonantType> kConsonantTypeNames[] = {
    {ConsonantType::Stop, "stop"},
    {ConsonantType::Fricative, "fricative"},
    {ConsonantType::Affricate, "affricate"},
    {ConsonantType::Nasal, "nasal"},
    {ConsonantType::Liquid, "liquid"},
    {ConsonantType::Glide, "glide"},
    {ConsonantType::NA, "n/a"},
};
constexpr EnumName<Place> kPlaceNames[] = {
    {Place::Bilabial, "bilabial"},
    {Place::Labiodental, "labiodental"},
    {Place::Dental, "dental"},
    {Place::Alveolar, "alveolar"},
    {Place::Postalveolar, "postalveolar"},
    {Place::Palatal, "palatal"},
    {Place::Velar, "velar"},
    {Place::Glottal, "glottal"},
    {Place::NA, "n/a"},
};
constexpr EnumName<Voicing> kVoicingNames[] = {
    {Voicing::Voiced, "voiced"},
    {Voicing::Voiceless, "voiceless"},
    {Voicing::NA, "n/a"},
};

template <typename Enum, std::size_t M>
Enum parse_enum(const EnumName<Enum> (&names)[M], std::string_view text,
                const char* feature, int line_no) {
  for (const auto& entry : names) {
    if (text == entry.name) return entry.value;
  }
  throw std::runtime_error("feature table line " + std::to_string(line_no) +
                           ": unknown " + feature + " value '" + std::string(text) + "'");
}

template <typename Enum, std::size_t M>
const char* enum_name(const EnumName<Enum> (&names)[M], Enum value) {
  for (const auto& entry : names) {
    if (value == entry.value) return entry.name;
  }
  return "n/a";
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

bool is_valid_symbol(std::string_view symbol) {
  if (symbol.empty()) return false;
  return std::all_of(symbol.begin(), symbol.end(), [](unsigned char c) {
    return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
  });
}

constexpr const char* kExpectedHeader[] = {
    "phoneme", "is_vowel", "vowel_length", "vowel_height", "vowel_frontness",
    "lip_rounding", "consonant_type", "place", "voicing"};

void validate_class_consistency(const std::string& symbol, const PhonemeFeatures& f) {
  if (f.is_vowel) {
    const bool vowel_complete = f.vowel_length != VowelLength::NA &&
                                f.vowel_height != VowelHeight::NA &&
                                f.vowel_frontness != VowelFrontness::NA &&
                                f.lip_rounding != LipRounding::NA;
    const bool consonant_clear = f.consonant_type == ConsonantType::NA &&
                                 f.place == Place::NA && f.voicing == Voicing::NA;
    if (!vowel_complete || !consonant_clear) {
      throw std::runtime_error("phoneme '" + symbol +
                               "': vowels need all four vowel features set and all "
                               "consonant features n/a");
    }
  } else {
    const bool consonant_complete = f.consonant_type != ConsonantType::NA &&
                                    f.place != Place::NA && f.voicing != Voicing::NA;
    const bool vowel_clear = f.vowel_length == VowelLength::NA &&
                             f.vowel_height == VowelHeight::NA &&
                             f.vowel_frontness == VowelFrontness::NA &&
                             f.lip_rounding == LipRounding::NA;
    if (!consonant_complete || !vowel_clear) {
      throw std::runtime_error("phoneme '" + symbol +
                               "': consonants need consonant_type/place/voicing set "
                               "and all vowel features n/a");
    }
  }
}

}  // namespace

std::array<int, kNumFeatures> feature_codes(const PhonemeFeatures& f) {
  auto code = [](auto value, auto na) {
    return value == na ? kFeatureNA : static_cast<int>(value);
  };
  return {
      f.is_vowel ? 1 : 0,
      code(f.vowel_length, VowelLength::NA),
      code(f.vowel_height, VowelHeight::NA),
      code(f.vowel_frontness, VowelFrontness::NA),
      code(f.lip_rounding, LipRounding::NA),
      code(f.consonant_type, ConsonantType::NA),
      code(f.place, Place::NA),
      code(f.voicing, Voicing::NA),
  };
}

PhonemeInventory::PhonemeInventory(std::vector<std::string> symbols)
    : symbols_(std::move(symbols)) {
  if (symbols_.empty()) {
    throw std::invalid_argument("phoneme inventory is empty");
  }
  for (int i = 0; i < static_cast<int>(symbols_.size()); ++i) {
    const std::string& s = symbols_[i];
    if (!is_valid_symbol(s)) {
      throw std::invalid_argument("invalid phoneme symbol '" + s +
                                  "' (must be nonempty uppercase alphanumeric)");
    }
    if (!index_.emplace(s, i).second) {
      throw std::invalid_argument("duplicate phoneme '" + s + "'");
    }
  }
}

const std::string& PhonemeInventory::symbol(int id) const {
  if (id < 0 || id >= num_phonemes()) {
    throw std::out_of_range("phoneme id " + std::to_string(id) + " out of range");
  }
  return symbols_[id];
}

std::optional<int> PhonemeInventory::find(std::string_view symbol) const {
  auto it = index_.find(symbol);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int PhonemeInventory::id_of(std::string_view symbol) const {
  auto id = find(symbol);
  if (!id) {
    throw std::invalid_argument("unknown phoneme '" + std::string(symbol) + "'");
  }
  return *id;
}

FeatureTable::FeatureTable(const PhonemeInventory& inventory,
                           std::vector<PhonemeFeatures> features)
    : features_(std::move(features)) {
  if (static_cast<int>(features_.size()) != inventory.num_phonemes()) {
    throw std::invalid_argument("feature table has " +
                                std::to_string(features_.size()) + " entries for " +
                                std::to_string(inventory.num_phonemes()) + " phonemes");
  }
  for (int i = 0; i < static_cast<int>(features_.size()); ++i) {
    validate_class_consistency(inventory.symbol(i), features_[i]);
  }
}

const PhonemeFeatures& FeatureTable::of(int id) const {
  if (id < 0 || id >= size()) {
    throw std::out_of_range("feature table id " + std::to_string(id) + " out of range");
  }
  return features_[id];
}

InventoryLoadResult parse_feature_table(std::istream& in) {
  std::vector<std::string> symbols;
  std::vector<PhonemeFeatures> features;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> fields = split_tabs(line);
    if (fields.size() != 9) {
      throw std::runtime_error("feature table line " + std::to_string(line_no) +
                               ": expected 9 tab-separated fields, got " +
                               std::to_string(fields.size()));
    }
    if (!header_seen) {
      for (int i = 0; i < 9; ++i) {
        if (fields[i] != kExpectedHeader[i]) {
          throw std::runtime_error("feature table line " + std::to_string(line_no) +
                                   ": bad header column '" + fields[i] + "', expected '" +
                                   kExpectedHeader[i] + "'");
        }
      }
      header_seen = true;
      continue;
    }
    const std::string& symbol = fields[0];
    if (!is_valid_symbol(symbol)) {
      throw std::runtime_error("feature table line " + std::to_string(line_no) +
                               ": invalid phoneme symbol '" + symbol + "'");
    }
    if (std::find(symbols.begin(), symbols.end(), symbol) != symbols.end()) {
      throw std::runtime_error("feature table line " + std::to_string(line_no) +
                               ": duplicate phoneme '" + symbol + "'");
    }
    PhonemeFeatures f;
    if (fields[1] == "true") {
      f.is_vowel = true;
    } else if (fields[1] == "false") {
      f.is_vowel = false;
    } else {
      throw std::runtime_error("feature table line " + std::to_string(line_no) +
                               ": is_vowel must be 'true' or 'false', got '" +
                               fields[1] + "'");
    }
    f.vowel_length = parse_enum(kVowelLengthNames, fields[2], "vowel_length", line_no);
    f.vowel_height = parse_enum(kVowelHeightNames, fields[3], "vowel_height", line_no);
    f.vowel_frontness =
        parse_enum(kVowelFrontnessNames, fields[4], "vowel_frontness", line_no);
    f.lip_rounding = parse_enum(kLipRoundingNames, fields[5], "lip_rounding", line_no);
    f.consonant_type =
        parse_enum(kConsonantTypeNames, fields[6], "consonant_type", line_no);
    f.place = parse_enum(kPlaceNames, fields[7], "place", line_no);
    f.voicing = parse_enum(kVoicingNames, fields[8], "voicing", line_no);
    symbols.push_back(symbol);
    features.push_back(f);
  }
  if (!header_seen) {
    throw std::runtime_error("feature table: missing header row");
  }
  if (symbols.empty()) {
    throw std::runtime_error("feature table: no phonemes defined");
  }
  PhonemeInventory inventory(std::move(symbols));
  FeatureTable table(inventory, std::move(features));
  return {std::move(inventory), std::move(table)};
}

InventoryLoadResult load_inventory() {
  std::istringstream in(kDefaultFeatureTableTsv);
  return parse_feature_table(in);
}

InventoryLoadResult load_inventory(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open feature table file '" + path + "'");
  }
  return parse_feature_table(in);
}

void save_feature_table(const PhonemeInventory& inventory,
                        const FeatureTable& features, std::ostream& out) {
  out << "phoneme";
  for (int i = 1; i < 9; ++i) out << '\t' << kExpectedHeader[i];
  out << '\n';
  for (int i = 0; i < inventory.num_phonemes(); ++i) {
    const PhonemeFeatures& f = features.of(i);
    out << inventory.symbol(i) << '\t' << (f.is_vowel ? "true" : "false") << '\t'
        << enum_name(kVowelLengthNames, f.vowel_length) << '\t'
        << enum_name(kVowelHeightNames, f.vowel_height) << '\t'
        << enum_name(kVowelFrontnessNames, f.vowel_frontness) << '\t'
        << enum_name(kLipRoundingNames, f.lip_rounding) << '\t'
        << enum_name(kConsonantTypeNames, f.consonant_type) << '\t'
        << enum_name(kPlaceNames, f.place) << '\t'
        << enum_name(kVoicingNames, f.voicing) << '\n';
  }
}

namespace {

// Strips a single trailing stress digit (0-2); cmudict puts them on vowels.
std::string strip_stress(const std::string& symbol) {
  if (symbol.size() >= 2 && symbol.back() >= '0' && symbol.back() <= '2') {
    return symbol.substr(0, symbol.size() - 1);
  }
  return symbol;
}

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

Lexicon parse_lexicon(std::istream& in, const PhonemeInventory& inventory) {
  Lexicon lexicon;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind(";;;", 0) == 0) continue;

    std::istringstream fields(line);
    std::string word;
    fields >> word;
    if (word.empty()) continue;

    // Variant suffix "(k)" marks an alternate pronunciation of an earlier word.
    std::size_t paren = word.find('(');
    if (paren != std::string::npos && word.back() == ')') {
      word = word.substr(0, paren);
    }
    if (word.empty()) {
      throw std::runtime_error("lexicon line " + std::to_string(line_no) +
                               ": blank word");
    }
    word = lowercase(word);

    std::vector<std::string> phonemes;
    std::string token;
    while (fields >> token) {
      std::string symbol = strip_stress(token);
      if (!inventory.contains(symbol)) {
        throw std::runtime_error("lexicon line " + std::to_string(line_no) +
                                 ": unknown phoneme '" + token + "' in word '" + word +
                                 "'");
      }
      phonemes.push_back(std::move(symbol));
    }
    if (phonemes.empty()) {
      throw std::runtime_error("lexicon line " + std::to_string(line_no) +
                               ": word '" + word + "' has no pronunciation");
    }
    lexicon.entries[word].push_back(std::move(phonemes));
  }
  return lexicon;
}

Lexicon load_lexicon(const std::string& path, const PhonemeInventory& inventory) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open lexicon file '" + path + "'");
  }
  return parse_lexicon(in, inventory);
}

std::string serialize_lexicon(const Lexicon& lexicon) {
  std::ostringstream out;
  for (const auto& [word, variants] : lexicon.entries) {
    for (std::size_t k = 0; k < variants.size(); ++k) {
      out << word;
      if (k > 0) out << '(' << (k + 1) << ')';
      out << ' ';
      for (const std::string& phoneme : variants[k]) out << ' ' << phoneme;
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace phonerr
