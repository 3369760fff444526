#include "phonerr/similarity.h"

#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "phonerr/inventory.h"

using namespace phonerr;

namespace {

// Hand-computed golden constants over the shipped feature table (see the
// similarity tests' derivation: matched weights / applicable weights).
constexpr double kGoldenThS = 5.0 / 7.0;   // both fricatives, voiceless; place differs
constexpr double kGoldenAaIy = 4.0 / 7.0;  // both long unrounded; height/frontness differ

InventoryLoadResult& default_set() {
  static InventoryLoadResult result = load_inventory();
  return result;
}

void check_matrix_invariants(const SimilarityMatrix& s) {
  const int n = s.size();
  for (int i = 0; i < n; ++i) {
    CHECK(s.at(i, i) == 1.0);
    for (int j = 0; j < n; ++j) {
      CHECK(s.at(i, j) == s.at(j, i));
      CHECK(s.at(i, j) >= 0.0);
      CHECK(s.at(i, j) <= 1.0);
    }
  }
}

// Embedding table over the first `count` default phonemes.
EmbeddingTable small_embedding(int count, const std::vector<std::vector<double>>& vecs) {
  const auto& inventory = default_set().inventory;
  std::vector<std::string> symbols(inventory.symbols().begin(),
                                   inventory.symbols().begin() + count);
  return EmbeddingTable(PhonemeInventory(symbols), vecs);
}

}  // namespace

TEST_CASE("heuristic similarity golden values") {
  const auto& [inventory, features] = default_set();
  SimilarityMatrix s = heuristic_similarity(inventory, features);
  CHECK(s.at("AA", "AA") == 1.0);
  CHECK(s.at("TH", "S") == doctest::Approx(kGoldenThS).epsilon(1e-12));
  CHECK(s.at("AA", "IY") == doctest::Approx(kGoldenAaIy).epsilon(1e-12));
  // Cross-class pairs share no feature values, so they score zero.
  CHECK(s.at("AA", "B") == 0.0);
}

TEST_CASE("heuristic similarity invariants over the full inventory") {
  const auto& [inventory, features] = default_set();
  check_matrix_invariants(heuristic_similarity(inventory, features));
}

TEST_CASE("heuristic similarity is invariant to uniform weight scaling") {
  const auto& [inventory, features] = default_set();
  SimilarityMatrix base = heuristic_similarity(inventory, features);
  for (double c : {0.5, 2.0, 10.0}) {
    std::vector<double> scaled(kDefaultFeatureWeights.begin(),
                               kDefaultFeatureWeights.end());
    for (double& w : scaled) w *= c;
    SimilarityMatrix other = heuristic_similarity(inventory, features, scaled);
    for (int i = 0; i < base.size(); ++i) {
      for (int j = 0; j < base.size(); ++j) {
        CHECK(other.at(i, j) == doctest::Approx(base.at(i, j)).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("heuristic similarity weight validation") {
  const auto& [inventory, features] = default_set();
  std::vector<double> seven(7, 0.1);
  CHECK_THROWS_AS(heuristic_similarity(inventory, features, seven),
                  std::invalid_argument);
  std::vector<double> negative(kDefaultFeatureWeights.begin(),
                               kDefaultFeatureWeights.end());
  negative[3] = -0.1;
  CHECK_THROWS_AS(heuristic_similarity(inventory, features, negative),
                  std::invalid_argument);
}

TEST_CASE("embedding similarity on the 3-phoneme toy table") {
  // Scalars 0, 1, 3: off-diagonal distances {1, 2, 3} min-max to
  // similarities 1.0, 0.5, 0.0.
  EmbeddingTable emb = small_embedding(3, {{0.0}, {1.0}, {3.0}});
  SimilarityMatrix s = embedding_similarity(emb);
  CHECK(s.at(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.at(1, 2) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.at(0, 2) == doctest::Approx(0.0).epsilon(1e-12));
  check_matrix_invariants(s);
}

TEST_CASE("identical vectors score similarity 1") {
  EmbeddingTable emb = small_embedding(3, {{0.0, 0.0}, {0.0, 0.0}, {5.0, 0.0}});
  SimilarityMatrix s = embedding_similarity(emb);
  CHECK(s.at(0, 1) == 1.0);
}

TEST_CASE("degenerate embedding tables are rejected") {
  // Two phonemes: a single off-diagonal distance, nothing to normalize.
  CHECK_THROWS_AS(embedding_similarity(small_embedding(2, {{0.0}, {1.0}})),
                  std::invalid_argument);
  // Equilateral triangle: all pairs equidistant.
  const double h = std::sqrt(3.0) / 2.0;
  CHECK_THROWS_AS(
      embedding_similarity(small_embedding(3, {{0.0, 0.0}, {1.0, 0.0}, {0.5, h}})),
      std::invalid_argument);
}

TEST_CASE("embedding similarity invariant under rotation and uniform scaling") {
  const auto& [inventory, features] = default_set();
  std::mt19937_64 rng(20240517);
  const int dim = 4;
  std::vector<std::vector<double>> vecs(inventory.num_phonemes(),
                                        std::vector<double>(dim));
  auto unit = [&rng]() {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0;
  };
  for (auto& v : vecs) {
    for (double& x : v) x = unit();
  }
  EmbeddingTable base_table(inventory, vecs);
  SimilarityMatrix base = embedding_similarity(base_table);
  check_matrix_invariants(base);

  // Rotate in the (0,1) and (2,3) planes, then scale everything by 3.7.
  const double theta = 0.83, phi = -1.21, scale = 3.7;
  std::vector<std::vector<double>> transformed = vecs;
  for (auto& v : transformed) {
    const double a = v[0] * std::cos(theta) - v[1] * std::sin(theta);
    const double b = v[0] * std::sin(theta) + v[1] * std::cos(theta);
    const double c = v[2] * std::cos(phi) - v[3] * std::sin(phi);
    const double d = v[2] * std::sin(phi) + v[3] * std::cos(phi);
    v = {scale * a, scale * b, scale * c, scale * d};
  }
  SimilarityMatrix other = embedding_similarity(EmbeddingTable(inventory, transformed));
  for (int i = 0; i < base.size(); ++i) {
    for (int j = 0; j < base.size(); ++j) {
      CHECK(other.at(i, j) == doctest::Approx(base.at(i, j)).epsilon(1e-9));
    }
  }
}

TEST_CASE("row normalization") {
  const auto& [inventory, features] = default_set();

  SUBCASE("identity stays identity") {
    NormalizedSimilarity s_hat = normalize(SimilarityMatrix::identity(inventory));
    for (int i = 0; i < s_hat.size(); ++i) {
      for (int j = 0; j < s_hat.size(); ++j) {
        CHECK(s_hat.at(i, j) == (i == j ? 1.0 : 0.0));
      }
    }
  }
  SUBCASE("2x2 golden case") {
    std::istringstream table(
        "phoneme\tis_vowel\tvowel_length\tvowel_height\tvowel_frontness\tlip_"
        "rounding\tconsonant_type\tplace\tvoicing\n"
        "AA\ttrue\tlong\tlow\tback\tunrounded\tn/a\tn/a\tn/a\n"
        "IY\ttrue\tlong\thigh\tfront\tunrounded\tn/a\tn/a\tn/a\n");
    auto two = parse_feature_table(table);
    SimilarityMatrix s(two.inventory, {1.0, 0.5, 0.5, 1.0}, SimilarityMethod::Heuristic);
    NormalizedSimilarity s_hat = normalize(s);
    CHECK(s_hat.at(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(s_hat.at(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(s_hat.at(1, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(s_hat.at(1, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  }
  SUBCASE("rows sum to one and keep their argmax on the diagonal") {
    SimilarityMatrix s = heuristic_similarity(inventory, features);
    NormalizedSimilarity s_hat = normalize(s);
    for (int i = 0; i < s_hat.size(); ++i) {
      double row_sum = 0.0;
      int argmax = 0;
      for (int j = 0; j < s_hat.size(); ++j) {
        row_sum += s_hat.at(i, j);
        CHECK(s_hat.at(i, j) >= 0.0);
        if (s_hat.at(i, j) > s_hat.at(i, argmax)) argmax = j;
      }
      CHECK(row_sum == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(argmax == i);
    }
  }
}

TEST_CASE("matrix CSV round trip") {
  const auto& [inventory, features] = default_set();
  SimilarityMatrix s = heuristic_similarity(inventory, features);
  std::ostringstream out;
  save_matrix(s, out);
  std::istringstream in(out.str());
  SimilarityMatrix reloaded = load_matrix(in, inventory);
  CHECK(reloaded.values() == s.values());
  CHECK(reloaded.inventory() == s.inventory());
}

TEST_CASE("matrix CSV validation") {
  std::istringstream table(
      "phoneme\tis_vowel\tvowel_length\tvowel_height\tvowel_frontness\tlip_"
      "rounding\tconsonant_type\tplace\tvoicing\n"
      "AA\ttrue\tlong\tlow\tback\tunrounded\tn/a\tn/a\tn/a\n"
      "IY\ttrue\tlong\thigh\tfront\tunrounded\tn/a\tn/a\tn/a\n");
  auto two = parse_feature_table(table);

  SUBCASE("asymmetry beyond 1e-12 is rejected") {
    std::istringstream in(",AA,IY\nAA,1,0.5\nIY,0.500001,1\n");
    CHECK_THROWS_WITH_AS(load_matrix(in, two.inventory),
                         doctest::Contains("asymmetric"), std::runtime_error);
  }
  SUBCASE("asymmetry within 1e-12 is symmetrized") {
    std::istringstream in(",AA,IY\nAA,1,0.5\nIY,0.5000000000000001,1\n");
    SimilarityMatrix s = load_matrix(in, two.inventory);
    CHECK(s.at(0, 1) == s.at(1, 0));
  }
  SUBCASE("out-of-range entry is rejected") {
    std::istringstream in(",AA,IY\nAA,1,1.5\nIY,1.5,1\n");
    CHECK_THROWS_WITH_AS(load_matrix(in, two.inventory),
                         doctest::Contains("outside [0, 1]"), std::runtime_error);
  }
  SUBCASE("header mismatch is rejected") {
    std::istringstream in(",AA,UW\nAA,1,0.5\nUW,0.5,1\n");
    CHECK_THROWS_AS(load_matrix(in, two.inventory), std::runtime_error);
  }
  SUBCASE("bad diagonal is rejected") {
    std::istringstream in(",AA,IY\nAA,0.9,0.5\nIY,0.5,1\n");
    CHECK_THROWS_AS(load_matrix(in, two.inventory), std::runtime_error);
  }
}
