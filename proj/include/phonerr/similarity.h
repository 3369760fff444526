// phonerr/similarity.h
//
// Phoneme similarity matrices: the heuristic (feature-comparison) builder,
// the generic embedding-distance builder, row-sum normalization, and CSV
// persistence. Matrices are N x N over the real phonemes only; loss code
// extends them with a blank row/column where needed.

#ifndef PHONERR_SIMILARITY_H_
#define PHONERR_SIMILARITY_H_

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "phonerr/inventory.h"

namespace phonerr {

// Default per-feature weights, in canonical feature order.
inline constexpr std::array<double, kNumFeatures> kDefaultFeatureWeights = {
    0.2, 0.1, 0.15, 0.15, 0.1, 0.2, 0.2, 0.1};

enum class SimilarityMethod { Heuristic, Embedding };

// Symmetric N x N similarity scores in [0, 1] with an exactly-1.0 diagonal,
// indexed by the inventory it was built over.
class SimilarityMatrix {
 public:
  // Validates squareness, exact symmetry, exact unit diagonal, and range.
  SimilarityMatrix(PhonemeInventory inventory, std::vector<double> values,
                   SimilarityMethod method);

  static SimilarityMatrix identity(PhonemeInventory inventory);

  int size() const { return inventory_.num_phonemes(); }
  double at(int i, int j) const { return values_[static_cast<std::size_t>(i) * size() + j]; }
  double at(std::string_view a, std::string_view b) const;
  const PhonemeInventory& inventory() const { return inventory_; }
  SimilarityMethod method() const { return method_; }
  const std::vector<double>& values() const { return values_; }

 private:
  PhonemeInventory inventory_;
  std::vector<double> values_;  // row-major N*N
  SimilarityMethod method_;
};

// Row-sum normalized similarity: every row sums to 1, entries nonnegative.
// Row i is the soft label of phoneme i.
class NormalizedSimilarity {
 public:
  explicit NormalizedSimilarity(const SimilarityMatrix& source);

  static NormalizedSimilarity identity(PhonemeInventory inventory);

  int size() const { return inventory_.num_phonemes(); }
  double at(int i, int j) const { return values_[static_cast<std::size_t>(i) * size() + j]; }
  const PhonemeInventory& inventory() const { return inventory_; }
  const std::vector<double>& values() const { return values_; }

 private:
  NormalizedSimilarity(PhonemeInventory inventory, std::vector<double> values);

  PhonemeInventory inventory_;
  std::vector<double> values_;
};

NormalizedSimilarity normalize(const SimilarityMatrix& s);

// Per-phoneme reference vectors of equal dimension (articulatory positions,
// syllabic features, ... units as supplied), aligned with inventory order.
class EmbeddingTable {
 public:
  EmbeddingTable(PhonemeInventory inventory,
                 std::vector<std::vector<double>> vectors);

  int dim() const { return dim_; }
  const PhonemeInventory& inventory() const { return inventory_; }
  const std::vector<double>& vector_of(int id) const;
  double distance(int i, int j) const;  // L2
  // Largest pairwise reference distance; the AER threshold scale.
  double max_pairwise_distance() const;

 private:
  PhonemeInventory inventory_;
  std::vector<std::vector<double>> vectors_;
  int dim_;
};

// TSV: phoneme symbol then D tab-separated floats per line; every inventory
// phoneme exactly once.
EmbeddingTable parse_embeddings(std::istream& in, const PhonemeInventory& inventory);
EmbeddingTable load_embeddings(const std::string& path, const PhonemeInventory& inventory);

// S[i][j] = sum of weights of matching features / sum of weights of features
// applicable to the pair. A feature matches when both values are equal and
// not n/a; it is applicable when at least one of the pair has a non-n/a
// value (both-n/a features drop out of numerator and denominator). The
// normalization makes self-similarity exactly 1 and is invariant to uniform
// scaling of the weights.
SimilarityMatrix heuristic_similarity(const PhonemeInventory& inventory,
                                      const FeatureTable& features,
                                      std::span<const double> weights);
SimilarityMatrix heuristic_similarity(const PhonemeInventory& inventory,
                                      const FeatureTable& features);

// S[i][j] = 1 - (d[i][j] - d_min) / (d_max - d_min) with pairwise L2
// distances min-max normalized over off-diagonal pairs; diagonal forced to
// exactly 1. Fails if all off-diagonal distances are equal.
SimilarityMatrix embedding_similarity(const EmbeddingTable& embeddings);

// CSV with the phoneme symbols as first row and first column, cells printed
// round-trip exactly. load re-validates all invariants against the expected
// inventory; the file format does not store the method tag, so the caller
// supplies it.
void save_matrix(const SimilarityMatrix& s, std::ostream& out);
void save_matrix(const SimilarityMatrix& s, const std::string& path);
SimilarityMatrix load_matrix(std::istream& in, const PhonemeInventory& expected,
                             SimilarityMethod method = SimilarityMethod::Heuristic);
SimilarityMatrix load_matrix(const std::string& path, const PhonemeInventory& expected,
                             SimilarityMethod method = SimilarityMethod::Heuristic);

}  // namespace phonerr

#endif  // PHONERR_SIMILARITY_H_
