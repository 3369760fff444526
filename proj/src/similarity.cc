// phonerr/similarity.cc

#include "phonerr/similarity.h"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace phonerr {

namespace {

constexpr double kLoadAsymmetryTolerance = 1e-12;

std::string format_cell(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

double parse_cell(const std::string& text, int row_no) {
  if (text.empty()) {
    throw std::runtime_error("matrix row " + std::to_string(row_no) + ": empty cell");
  }
  char* end = nullptr;
  const double value = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size()) {
    throw std::runtime_error("matrix row " + std::to_string(row_no) +
                             ": bad number '" + text + "'");
  }
  return value;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

}  // namespace

SimilarityMatrix::SimilarityMatrix(PhonemeInventory inventory,
                                   std::vector<double> values, SimilarityMethod method)
    : inventory_(std::move(inventory)), values_(std::move(values)), method_(method) {
  const int n = inventory_.num_phonemes();
  if (values_.size() != static_cast<std::size_t>(n) * n) {
    throw std::invalid_argument("similarity matrix has " +
                                std::to_string(values_.size()) + " values, expected " +
                                std::to_string(static_cast<std::size_t>(n) * n));
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double v = at(i, j);
      if (!(v >= 0.0 && v <= 1.0)) {
        throw std::invalid_argument("similarity S(" + inventory_.symbol(i) + ", " +
                                    inventory_.symbol(j) + ") = " + format_cell(v) +
                                    " outside [0, 1]");
      }
      if (at(i, j) != at(j, i)) {
        throw std::invalid_argument("similarity matrix asymmetric at (" +
                                    inventory_.symbol(i) + ", " + inventory_.symbol(j) +
                                    ")");
      }
    }
    if (at(i, i) != 1.0) {
      throw std::invalid_argument("similarity diagonal S(" + inventory_.symbol(i) +
                                  ") = " + format_cell(at(i, i)) + ", expected 1.0");
    }
  }
}

SimilarityMatrix SimilarityMatrix::identity(PhonemeInventory inventory) {
  const int n = inventory.num_phonemes();
  std::vector<double> values(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) values[static_cast<std::size_t>(i) * n + i] = 1.0;
  return SimilarityMatrix(std::move(inventory), std::move(values),
                          SimilarityMethod::Heuristic);
}

double SimilarityMatrix::at(std::string_view a, std::string_view b) const {
  return at(inventory_.id_of(a), inventory_.id_of(b));
}

NormalizedSimilarity::NormalizedSimilarity(PhonemeInventory inventory,
                                           std::vector<double> values)
    : inventory_(std::move(inventory)), values_(std::move(values)) {}

NormalizedSimilarity::NormalizedSimilarity(const SimilarityMatrix& source)
    : inventory_(source.inventory()) {
  const int n = source.size();
  values_.resize(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (int j = 0; j < n; ++j) row_sum += source.at(i, j);
    if (!(row_sum > 0.0)) {
      // Unreachable for a valid source: the diagonal contributes 1.
      throw std::invalid_argument("similarity row '" + inventory_.symbol(i) +
                                  "' sums to zero, cannot normalize");
    }
    for (int j = 0; j < n; ++j) {
      values_[static_cast<std::size_t>(i) * n + j] = source.at(i, j) / row_sum;
    }
  }
}

NormalizedSimilarity NormalizedSimilarity::identity(PhonemeInventory inventory) {
  const int n = inventory.num_phonemes();
  std::vector<double> values(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) values[static_cast<std::size_t>(i) * n + i] = 1.0;
  return NormalizedSimilarity(std::move(inventory), std::move(values));
}

NormalizedSimilarity normalize(const SimilarityMatrix& s) {
  return NormalizedSimilarity(s);
}

EmbeddingTable::EmbeddingTable(PhonemeInventory inventory,
                               std::vector<std::vector<double>> vectors)
    : inventory_(std::move(inventory)), vectors_(std::move(vectors)) {
  if (vectors_.size() != static_cast<std::size_t>(inventory_.num_phonemes())) {
    throw std::invalid_argument("embedding table has " +
                                std::to_string(vectors_.size()) + " vectors for " +
                                std::to_string(inventory_.num_phonemes()) + " phonemes");
  }
  if (vectors_.empty() || vectors_[0].empty()) {
    throw std::invalid_argument("embedding table has empty vectors");
  }
  dim_ = static_cast<int>(vectors_[0].size());
  for (int i = 0; i < static_cast<int>(vectors_.size()); ++i) {
    if (static_cast<int>(vectors_[i].size()) != dim_) {
      throw std::invalid_argument("embedding for '" + inventory_.symbol(i) + "' has " +
                                  std::to_string(vectors_[i].size()) +
                                  " components, expected " + std::to_string(dim_));
    }
    for (double v : vectors_[i]) {
      if (!std::isfinite(v)) {
        throw std::invalid_argument("embedding for '" + inventory_.symbol(i) +
                                    "' has a non-finite component");
      }
    }
  }
}

const std::vector<double>& EmbeddingTable::vector_of(int id) const {
  if (id < 0 || id >= static_cast<int>(vectors_.size())) {
    throw std::out_of_range("embedding id " + std::to_string(id) + " out of range");
  }
  return vectors_[id];
}

double EmbeddingTable::distance(int i, int j) const {
  const std::vector<double>& a = vector_of(i);
  const std::vector<double>& b = vector_of(j);
  double sum = 0.0;
  for (int d = 0; d < dim_; ++d) {
    const double diff = a[d] - b[d];
    sum += diff * diff;
  }
  return std::sqrt(sum);
}

double EmbeddingTable::max_pairwise_distance() const {
  double max_d = 0.0;
  const int n = static_cast<int>(vectors_.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      max_d = std::max(max_d, distance(i, j));
    }
  }
  return max_d;
}

EmbeddingTable parse_embeddings(std::istream& in, const PhonemeInventory& inventory) {
  std::vector<std::vector<double>> vectors(inventory.num_phonemes());
  std::vector<bool> seen(inventory.num_phonemes(), false);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string symbol;
    fields >> symbol;
    auto id = inventory.find(symbol);
    if (!id) {
      throw std::runtime_error("embedding line " + std::to_string(line_no) +
                               ": unknown phoneme '" + symbol + "'");
    }
    if (seen[*id]) {
      throw std::runtime_error("embedding line " + std::to_string(line_no) +
                               ": duplicate phoneme '" + symbol + "'");
    }
    std::vector<double> vec;
    double v = 0.0;
    while (fields >> v) vec.push_back(v);
    if (!fields.eof()) {
      throw std::runtime_error("embedding line " + std::to_string(line_no) +
                               ": bad vector component");
    }
    if (vec.empty()) {
      throw std::runtime_error("embedding line " + std::to_string(line_no) +
                               ": phoneme '" + symbol + "' has no vector");
    }
    vectors[*id] = std::move(vec);
    seen[*id] = true;
  }
  for (int i = 0; i < inventory.num_phonemes(); ++i) {
    if (!seen[i]) {
      throw std::runtime_error("embedding table missing phoneme '" +
                               inventory.symbol(i) + "'");
    }
  }
  return EmbeddingTable(inventory, std::move(vectors));
}

EmbeddingTable load_embeddings(const std::string& path,
                               const PhonemeInventory& inventory) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open embedding file '" + path + "'");
  }
  return parse_embeddings(in, inventory);
}

SimilarityMatrix heuristic_similarity(const PhonemeInventory& inventory,
                                      const FeatureTable& features,
                                      std::span<const double> weights) {
  if (weights.size() != kNumFeatures) {
    throw std::invalid_argument("expected " + std::to_string(kNumFeatures) +
                                " feature weights, got " + std::to_string(weights.size()));
  }
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("feature weights must be nonnegative and finite");
    }
  }

  const int n = inventory.num_phonemes();
  std::vector<std::array<int, kNumFeatures>> codes(n);
  for (int i = 0; i < n; ++i) codes[i] = feature_codes(features.of(i));

  std::vector<double> values(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    values[static_cast<std::size_t>(i) * n + i] = 1.0;
    for (int j = i + 1; j < n; ++j) {
      double matched = 0.0;
      double applicable = 0.0;
      for (int f = 0; f < kNumFeatures; ++f) {
        const int a = codes[i][f];
        const int b = codes[j][f];
        if (a == kFeatureNA && b == kFeatureNA) continue;
        applicable += weights[f];
        if (a == b) matched += weights[f];
      }
      if (!(applicable > 0.0)) {
        throw std::logic_error("no applicable feature weight for pair (" +
                               inventory.symbol(i) + ", " + inventory.symbol(j) + ")");
      }
      const double s = matched / applicable;
      values[static_cast<std::size_t>(i) * n + j] = s;
      values[static_cast<std::size_t>(j) * n + i] = s;
    }
  }
  return SimilarityMatrix(inventory, std::move(values), SimilarityMethod::Heuristic);
}

SimilarityMatrix heuristic_similarity(const PhonemeInventory& inventory,
                                      const FeatureTable& features) {
  return heuristic_similarity(inventory, features, kDefaultFeatureWeights);
}

SimilarityMatrix embedding_similarity(const EmbeddingTable& embeddings) {
  const PhonemeInventory& inventory = embeddings.inventory();
  const int n = inventory.num_phonemes();
  if (n < 2) {
    throw std::invalid_argument("embedding similarity needs at least two phonemes");
  }

  std::vector<double> dist(static_cast<std::size_t>(n) * n, 0.0);
  double d_min = std::numeric_limits<double>::infinity();
  double d_max = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double d = embeddings.distance(i, j);
      dist[static_cast<std::size_t>(i) * n + j] = d;
      d_min = std::min(d_min, d);
      d_max = std::max(d_max, d);
    }
  }
  // Relative guard: spacing at rounding-noise level would blow FP noise up
  // to full-scale similarity differences.
  if (!(d_max - d_min > 1e-12 * d_max)) {
    throw std::invalid_argument(
        "degenerate embedding table: all phoneme pairs are equidistant, "
        "min-max normalization undefined");
  }

  const double range = d_max - d_min;
  std::vector<double> values(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    values[static_cast<std::size_t>(i) * n + i] = 1.0;
    for (int j = i + 1; j < n; ++j) {
      const double d = dist[static_cast<std::size_t>(i) * n + j];
      double s = 1.0 - (d - d_min) / range;
      // Guard rounding at the extremes so the [0, 1] invariant stays exact.
      s = std::min(1.0, std::max(0.0, s));
      values[static_cast<std::size_t>(i) * n + j] = s;
      values[static_cast<std::size_t>(j) * n + i] = s;
    }
  }
  return SimilarityMatrix(inventory, std::move(values), SimilarityMethod::Embedding);
}

void save_matrix(const SimilarityMatrix& s, std::ostream& out) {
  const PhonemeInventory& inventory = s.inventory();
  const int n = s.size();
  for (int j = 0; j < n; ++j) out << ',' << inventory.symbol(j);
  out << '\n';
  for (int i = 0; i < n; ++i) {
    out << inventory.symbol(i);
    for (int j = 0; j < n; ++j) out << ',' << format_cell(s.at(i, j));
    out << '\n';
  }
}

void save_matrix(const SimilarityMatrix& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open matrix file '" + path + "' for writing");
  }
  save_matrix(s, out);
}

SimilarityMatrix load_matrix(std::istream& in, const PhonemeInventory& expected,
                             SimilarityMethod method) {
  const int n = expected.num_phonemes();
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("matrix file: missing header row");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = split_csv(line);
  if (static_cast<int>(header.size()) != n + 1 || !header[0].empty()) {
    throw std::runtime_error("matrix header does not match the inventory (expected " +
                             std::to_string(n) + " symbols after an empty corner cell)");
  }
  for (int j = 0; j < n; ++j) {
    if (header[j + 1] != expected.symbol(j)) {
      throw std::runtime_error("matrix header column " + std::to_string(j + 1) +
                               " is '" + header[j + 1] + "', inventory has '" +
                               expected.symbol(j) + "'");
    }
  }

  std::vector<double> values(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    if (!std::getline(in, line)) {
      throw std::runtime_error("matrix file: missing row for '" + expected.symbol(i) +
                               "'");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> fields = split_csv(line);
    if (static_cast<int>(fields.size()) != n + 1) {
      throw std::runtime_error("matrix row " + std::to_string(i + 2) + ": expected " +
                               std::to_string(n + 1) + " cells, got " +
                               std::to_string(fields.size()));
    }
    if (fields[0] != expected.symbol(i)) {
      throw std::runtime_error("matrix row " + std::to_string(i + 2) + " is '" +
                               fields[0] + "', inventory has '" + expected.symbol(i) +
                               "'");
    }
    for (int j = 0; j < n; ++j) {
      const double v = parse_cell(fields[j + 1], i + 2);
      if (!(v >= 0.0 && v <= 1.0)) {
        throw std::runtime_error("matrix entry S(" + expected.symbol(i) + ", " +
                                 expected.symbol(j) + ") = " + fields[j + 1] +
                                 " outside [0, 1]");
      }
      values[static_cast<std::size_t>(i) * n + j] = v;
    }
  }

  for (int i = 0; i < n; ++i) {
    if (std::abs(values[static_cast<std::size_t>(i) * n + i] - 1.0) >
        kLoadAsymmetryTolerance) {
      throw std::runtime_error("matrix diagonal S(" + expected.symbol(i) +
                               ") differs from 1.0");
    }
    values[static_cast<std::size_t>(i) * n + i] = 1.0;
    for (int j = i + 1; j < n; ++j) {
      const double upper = values[static_cast<std::size_t>(i) * n + j];
      const double lower = values[static_cast<std::size_t>(j) * n + i];
      if (std::abs(upper - lower) > kLoadAsymmetryTolerance) {
        throw std::runtime_error("matrix asymmetric at (" + expected.symbol(i) + ", " +
                                 expected.symbol(j) + "): " + format_cell(upper) +
                                 " vs " + format_cell(lower));
      }
      // Mirror the upper triangle so the exact-symmetry invariant holds.
      values[static_cast<std::size_t>(j) * n + i] = upper;
    }
  }
  return SimilarityMatrix(expected, std::move(values), method);
}

SimilarityMatrix load_matrix(const std::string& path, const PhonemeInventory& expected,
                             SimilarityMethod method) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open matrix file '" + path + "'");
  }
  return load_matrix(in, expected, method);
}

}  // namespace phonerr
