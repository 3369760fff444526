#include "phonerr/metrics.h"

#include <random>
#include <sstream>

#include "doctest.h"
#include "oracles.h"
#include "phonerr/inventory.h"
#include "phonerr/similarity.h"

using namespace phonerr;

namespace {

constexpr double kGoldenThS = 5.0 / 7.0;

InventoryLoadResult& default_set() {
  static InventoryLoadResult result = load_inventory();
  return result;
}

SimilarityMatrix& heuristic() {
  static SimilarityMatrix s =
      heuristic_similarity(default_set().inventory, default_set().features);
  return s;
}

// Replays the op list: match/substitute/delete must consume the reference in
// order, match/substitute/insert must produce the hypothesis in order.
void check_replay(const AlignmentResult& a, const std::vector<std::string>& ref,
                  const std::vector<std::string>& hyp) {
  std::vector<std::string> consumed;
  std::vector<std::string> produced;
  for (const EditOp& op : a.ops) {
    switch (op.kind) {
      case EditKind::Match:
        REQUIRE(op.ref.has_value());
        REQUIRE(op.hyp.has_value());
        CHECK(*op.ref == *op.hyp);
        consumed.push_back(*op.ref);
        produced.push_back(*op.hyp);
        break;
      case EditKind::Substitute:
        REQUIRE(op.ref.has_value());
        REQUIRE(op.hyp.has_value());
        CHECK(*op.ref != *op.hyp);
        consumed.push_back(*op.ref);
        produced.push_back(*op.hyp);
        break;
      case EditKind::Delete:
        REQUIRE(op.ref.has_value());
        CHECK_FALSE(op.hyp.has_value());
        consumed.push_back(*op.ref);
        break;
      case EditKind::Insert:
        REQUIRE(op.hyp.has_value());
        CHECK_FALSE(op.ref.has_value());
        produced.push_back(*op.hyp);
        break;
    }
  }
  CHECK(consumed == ref);
  CHECK(produced == hyp);
  CHECK(a.matches + a.substitutions + a.deletions == a.ref_len);
  CHECK(a.ref_len == static_cast<int>(ref.size()));
}

std::vector<std::string> random_sequence(std::mt19937_64& rng, int max_len,
                                         int alphabet, bool allow_empty) {
  static const std::vector<std::string> symbols = {"AA", "IY", "TH", "S", "K"};
  const int min_len = allow_empty ? 0 : 1;
  const int len = min_len + static_cast<int>(rng() % (max_len - min_len + 1));
  std::vector<std::string> seq;
  for (int i = 0; i < len; ++i) seq.push_back(symbols[rng() % alphabet]);
  return seq;
}

}  // namespace

TEST_CASE("alignment basics") {
  const auto& inventory = default_set().inventory;
  const std::vector<std::string> think = {"TH", "IH", "NG", "K"};

  SUBCASE("identity") {
    AlignmentResult a = align(think, think, inventory);
    CHECK(a.matches == 4);
    CHECK(a.substitutions == 0);
    CHECK(a.insertions == 0);
    CHECK(a.deletions == 0);
    CHECK(per(a) == 0.0);
    check_replay(a, think, think);
  }
  SUBCASE("the TH/S confusion is one substitution") {
    const std::vector<std::string> hyp = {"S", "IH", "NG", "K"};
    AlignmentResult a = align(think, hyp, inventory);
    CHECK(a.substitutions == 1);
    CHECK(a.matches == 3);
    CHECK(per(a) == doctest::Approx(0.25));
    check_replay(a, think, hyp);
  }
  SUBCASE("single deletion") {
    const std::vector<std::string> ref = {"AA", "B"};
    const std::vector<std::string> hyp = {"B"};
    AlignmentResult a = align(ref, hyp, inventory);
    CHECK(a.deletions == 1);
    CHECK(a.matches == 1);
    check_replay(a, ref, hyp);
  }
  SUBCASE("insertions can push PER past 1") {
    const std::vector<std::string> ref = {"AA", "B"};
    const std::vector<std::string> hyp = {"AA", "B", "K", "S", "TH"};
    AlignmentResult a = align(ref, hyp, inventory);
    CHECK(per(a) == doctest::Approx(1.5));
  }
  SUBCASE("empty reference is rejected") {
    CHECK_THROWS_AS(align({}, think, inventory), std::invalid_argument);
  }
  SUBCASE("unknown symbols are rejected") {
    const std::vector<std::string> bad = {"TH", "QX"};
    CHECK_THROWS_AS(align(bad, think, inventory), std::invalid_argument);
    CHECK_THROWS_AS(align(think, bad, inventory), std::invalid_argument);
  }
}

TEST_CASE("alignment matches brute force on random pairs") {
  const auto& inventory = default_set().inventory;
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    const auto ref = random_sequence(rng, 6, 5, false);
    const auto hyp = random_sequence(rng, 6, 5, true);
    AlignmentResult a = align(ref, hyp, inventory);
    const int cost = a.substitutions + a.insertions + a.deletions;
    CHECK(cost == oracles::brute_force_edit_cost(ref, hyp));
    CHECK(per(a) >= 0.0);
    CHECK((per(a) == 0.0) == (ref == hyp));
    check_replay(a, ref, hyp);
  }
}

TEST_CASE("wper") {
  const auto& inventory = default_set().inventory;
  const SimilarityMatrix& s = heuristic();
  const std::vector<std::string> think = {"TH", "IH", "NG", "K"};
  const std::vector<std::string> sink = {"S", "IH", "NG", "K"};

  SUBCASE("identity alignment scores zero") {
    CHECK(wper(align(think, think, inventory), s) == 0.0);
  }
  SUBCASE("golden TH/S value, unit and weighted alignment agree") {
    const double expected = (1.0 - kGoldenThS) / 4.0;  // 1/14
    CHECK(wper(align(think, sink, inventory), s) ==
          doctest::Approx(expected).epsilon(1e-12));
    CHECK(wper(align_weighted(think, sink, s), s) ==
          doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("identity similarity makes wper equal per") {
    SimilarityMatrix identity = SimilarityMatrix::identity(inventory);
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
      const auto ref = random_sequence(rng, 6, 5, false);
      const auto hyp = random_sequence(rng, 6, 5, true);
      AlignmentResult a = align(ref, hyp, inventory);
      CHECK(wper(a, identity) == doctest::Approx(per(a)).epsilon(1e-12));
      AlignmentResult aw = align_weighted(ref, hyp, identity);
      CHECK(wper(aw, identity) == doctest::Approx(per(a)).epsilon(1e-12));
    }
  }
  SUBCASE("wper never exceeds per") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 500; ++trial) {
      const auto ref = random_sequence(rng, 6, 5, false);
      const auto hyp = random_sequence(rng, 6, 5, true);
      AlignmentResult a = align(ref, hyp, inventory);
      CHECK(wper(a, s) <= per(a) + 1e-12);
      // The weighted alignment can only lower the weighted sum further.
      CHECK(wper(align_weighted(ref, hyp, s), s) <= wper(a, s) + 1e-12);
    }
  }
  SUBCASE("wper is monotone nonincreasing in a touched similarity entry") {
    const auto& inv = default_set().inventory;
    AlignmentResult a = align(think, sink, inventory);
    const int th = inv.id_of("TH");
    const int s_id = inv.id_of("S");
    for (double lower : {0.0, 0.3, kGoldenThS}) {
      std::vector<double> values = SimilarityMatrix::identity(inv).values();
      values[th * inv.num_phonemes() + s_id] = lower;
      values[s_id * inv.num_phonemes() + th] = lower;
      SimilarityMatrix varied(inv, values, SimilarityMethod::Heuristic);
      CHECK(wper(a, varied) == doctest::Approx((1.0 - lower) / 4.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("weighted alignment prefers cheap substitutions") {
  // With substitution cost 1 - S, a similar pair should substitute rather
  // than split into delete + insert even when unit costs tie.
  const SimilarityMatrix& s = heuristic();
  const std::vector<std::string> ref = {"TH"};
  const std::vector<std::string> hyp = {"S"};
  AlignmentResult a = align_weighted(ref, hyp, s);
  CHECK(a.substitutions == 1);
  CHECK(wper(a, s) == doctest::Approx((1.0 - kGoldenThS) / 1.0));
}

TEST_CASE("aer") {
  std::istringstream table(
      "phoneme\tis_vowel\tvowel_length\tvowel_height\tvowel_frontness\tlip_"
      "rounding\tconsonant_type\tplace\tvoicing\n"
      "AA\ttrue\tlong\tlow\tback\tunrounded\tn/a\tn/a\tn/a\n"
      "IY\ttrue\tlong\thigh\tfront\tunrounded\tn/a\tn/a\tn/a\n");
  auto two = parse_feature_table(table);
  EmbeddingTable refs(two.inventory, {{0.0}, {10.0}});

  SUBCASE("hand example: frames 0, 6, 10 against target AA with tau 5") {
    ArticulatoryTrack track{{{0.0}, {6.0}, {10.0}}, {"AA", "AA", "AA"}};
    CHECK(aer(track, refs, 0.5) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  }
  SUBCASE("frames sitting on their targets score zero") {
    ArticulatoryTrack track{{{0.0}, {10.0}, {0.0}}, {"AA", "IY", "AA"}};
    CHECK(aer(track, refs, 0.5) == 0.0);
  }
  SUBCASE("aer grows as tau_factor shrinks") {
    ArticulatoryTrack track{{{0.0}, {3.0}, {6.0}, {9.0}}, {"AA", "AA", "AA", "AA"}};
    const double loose = aer(track, refs, 1.0);
    const double mid = aer(track, refs, 0.5);
    const double tight = aer(track, refs, 0.25);
    CHECK(tight >= mid);
    CHECK(mid >= loose);
  }
  SUBCASE("dimension mismatch is rejected") {
    ArticulatoryTrack track{{{0.0, 1.0}}, {"AA"}};
    CHECK_THROWS_AS(aer(track, refs, 0.5), std::invalid_argument);
  }
  SUBCASE("degenerate references are rejected") {
    EmbeddingTable degenerate(two.inventory, {{3.0}, {3.0}});
    ArticulatoryTrack track{{{0.0}}, {"AA"}};
    CHECK_THROWS_AS(aer(track, degenerate, 0.5), std::invalid_argument);
  }
  SUBCASE("unknown frame target is rejected") {
    ArticulatoryTrack track{{{0.0}}, {"UW"}};
    CHECK_THROWS_AS(aer(track, refs, 0.5), std::invalid_argument);
  }
}

TEST_CASE("uniform frame partition") {
  const std::vector<std::string> ref = {"TH", "IH", "NG", "K"};
  auto targets = uniform_frame_targets(ref, 10);
  REQUIRE(targets.size() == 10);
  // Non-decreasing walk through the reference covering every phoneme.
  CHECK(targets.front() == "TH");
  CHECK(targets.back() == "K");
  std::size_t cursor = 0;
  for (const std::string& t : targets) {
    while (cursor < ref.size() && ref[cursor] != t) ++cursor;
    REQUIRE(cursor < ref.size());
  }
  CHECK(uniform_frame_targets(ref, 4) == ref);
  CHECK_THROWS_AS(uniform_frame_targets(ref, 0), std::invalid_argument);
  CHECK_THROWS_AS(uniform_frame_targets({}, 3), std::invalid_argument);
}
