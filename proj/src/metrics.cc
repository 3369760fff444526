// phonerr/metrics.cc

#include "phonerr/metrics.h"

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace phonerr {

namespace {

// Backtrace moves, in tie-break preference order.
enum class Move : std::uint8_t { MatchSub, Delete, Insert };

struct DpResult {
  std::vector<double> cost;   // (R+1) x (H+1)
  std::vector<Move> from;
  std::size_t cols = 0;
};

// Shared DP: cost(i, j) = cheapest way to turn ref[0..i) into hyp[0..j).
// sub_cost(i, j) gives the substitution cost for ref[i] -> hyp[j]; insert
// and delete cost 1. Ties prefer match/substitute over delete over insert.
template <typename SubCost>
DpResult edit_dp(std::size_t ref_len, std::size_t hyp_len, SubCost sub_cost) {
  DpResult dp;
  dp.cols = hyp_len + 1;
  dp.cost.assign((ref_len + 1) * dp.cols, 0.0);
  dp.from.assign((ref_len + 1) * dp.cols, Move::MatchSub);
  auto cost = [&dp](std::size_t i, std::size_t j) -> double& {
    return dp.cost[i * dp.cols + j];
  };
  auto from = [&dp](std::size_t i, std::size_t j) -> Move& {
    return dp.from[i * dp.cols + j];
  };

  for (std::size_t i = 1; i <= ref_len; ++i) {
    cost(i, 0) = static_cast<double>(i);
    from(i, 0) = Move::Delete;
  }
  for (std::size_t j = 1; j <= hyp_len; ++j) {
    cost(0, j) = static_cast<double>(j);
    from(0, j) = Move::Insert;
  }
  for (std::size_t i = 1; i <= ref_len; ++i) {
    for (std::size_t j = 1; j <= hyp_len; ++j) {
      double best = cost(i - 1, j - 1) + sub_cost(i - 1, j - 1);
      Move move = Move::MatchSub;
      const double del = cost(i - 1, j) + 1.0;
      if (del < best) {
        best = del;
        move = Move::Delete;
      }
      const double ins = cost(i, j - 1) + 1.0;
      if (ins < best) {
        best = ins;
        move = Move::Insert;
      }
      cost(i, j) = best;
      from(i, j) = move;
    }
  }
  return dp;
}

AlignmentResult backtrace(const DpResult& dp, std::span<const std::string> ref,
                          std::span<const std::string> hyp) {
  AlignmentResult result;
  result.ref_len = static_cast<int>(ref.size());

  std::size_t i = ref.size();
  std::size_t j = hyp.size();
  std::vector<EditOp> reversed;
  while (i > 0 || j > 0) {
    switch (dp.from[i * dp.cols + j]) {
      case Move::MatchSub:
        --i;
        --j;
        if (ref[i] == hyp[j]) {
          reversed.push_back({EditKind::Match, ref[i], hyp[j]});
          ++result.matches;
        } else {
          reversed.push_back({EditKind::Substitute, ref[i], hyp[j]});
          ++result.substitutions;
        }
        break;
      case Move::Delete:
        --i;
        reversed.push_back({EditKind::Delete, ref[i], std::nullopt});
        ++result.deletions;
        break;
      case Move::Insert:
        --j;
        reversed.push_back({EditKind::Insert, std::nullopt, hyp[j]});
        ++result.insertions;
        break;
    }
  }
  result.ops.assign(reversed.rbegin(), reversed.rend());
  return result;
}

void check_ref_nonempty(std::span<const std::string> ref) {
  if (ref.empty()) {
    throw std::invalid_argument("alignment reference is empty");
  }
}

}  // namespace

AlignmentResult align(std::span<const std::string> ref,
                      std::span<const std::string> hyp,
                      const PhonemeInventory& inventory) {
  check_ref_nonempty(ref);
  for (const std::string& s : ref) inventory.id_of(s);
  for (const std::string& s : hyp) inventory.id_of(s);
  DpResult dp = edit_dp(ref.size(), hyp.size(), [&](std::size_t i, std::size_t j) {
    return ref[i] == hyp[j] ? 0.0 : 1.0;
  });
  return backtrace(dp, ref, hyp);
}

AlignmentResult align_weighted(std::span<const std::string> ref,
                               std::span<const std::string> hyp,
                               const SimilarityMatrix& similarity) {
  check_ref_nonempty(ref);
  const PhonemeInventory& inventory = similarity.inventory();
  std::vector<int> ref_ids(ref.size());
  std::vector<int> hyp_ids(hyp.size());
  for (std::size_t i = 0; i < ref.size(); ++i) ref_ids[i] = inventory.id_of(ref[i]);
  for (std::size_t j = 0; j < hyp.size(); ++j) hyp_ids[j] = inventory.id_of(hyp[j]);
  DpResult dp = edit_dp(ref.size(), hyp.size(), [&](std::size_t i, std::size_t j) {
    return 1.0 - similarity.at(ref_ids[i], hyp_ids[j]);
  });
  return backtrace(dp, ref, hyp);
}

double per(const AlignmentResult& alignment) {
  if (alignment.ref_len <= 0) {
    throw std::invalid_argument("alignment has empty reference");
  }
  return static_cast<double>(alignment.substitutions + alignment.insertions +
                             alignment.deletions) /
         static_cast<double>(alignment.ref_len);
}

double wper(const AlignmentResult& alignment, const SimilarityMatrix& similarity) {
  if (alignment.ref_len <= 0) {
    throw std::invalid_argument("alignment has empty reference");
  }
  double weighted_subs = 0.0;
  for (const EditOp& op : alignment.ops) {
    if (op.kind == EditKind::Substitute) {
      weighted_subs += 1.0 - similarity.at(*op.ref, *op.hyp);
    }
  }
  return (static_cast<double>(alignment.deletions) + weighted_subs +
          static_cast<double>(alignment.insertions)) /
         static_cast<double>(alignment.ref_len);
}

double aer(const ArticulatoryTrack& track, const EmbeddingTable& refs,
           double tau_factor) {
  if (track.frames.empty()) {
    throw std::invalid_argument("articulatory track has no frames");
  }
  if (track.frame_targets.size() != track.frames.size()) {
    throw std::invalid_argument("track has " + std::to_string(track.frames.size()) +
                                " frames but " +
                                std::to_string(track.frame_targets.size()) +
                                " frame targets");
  }
  if (!(tau_factor > 0.0)) {
    throw std::invalid_argument("tau_factor must be positive");
  }
  const double max_distance = refs.max_pairwise_distance();
  if (!(max_distance > 0.0)) {
    throw std::invalid_argument(
        "degenerate reference embeddings: maximum pairwise distance is zero");
  }
  const double tau = tau_factor * max_distance;
  const int dim = refs.dim();

  std::int64_t negatives = 0;
  for (std::size_t t = 0; t < track.frames.size(); ++t) {
    const std::vector<double>& frame = track.frames[t];
    if (static_cast<int>(frame.size()) != dim) {
      throw std::invalid_argument("frame " + std::to_string(t) + " has dimension " +
                                  std::to_string(frame.size()) + ", references have " +
                                  std::to_string(dim));
    }
    const int target = refs.inventory().id_of(track.frame_targets[t]);
    const std::vector<double>& ref_vec = refs.vector_of(target);
    double sum = 0.0;
    for (int d = 0; d < dim; ++d) {
      if (!std::isfinite(frame[d])) {
        throw std::invalid_argument("frame " + std::to_string(t) +
                                    " has a non-finite value");
      }
      const double diff = frame[d] - ref_vec[d];
      sum += diff * diff;
    }
    if (std::sqrt(sum) > tau) ++negatives;
  }
  return static_cast<double>(negatives) / static_cast<double>(track.frames.size());
}

std::vector<std::string> uniform_frame_targets(std::span<const std::string> ref,
                                               int num_frames) {
  if (ref.empty()) {
    throw std::invalid_argument("cannot partition frames over an empty reference");
  }
  if (num_frames < 1) {
    throw std::invalid_argument("num_frames must be at least 1");
  }
  std::vector<std::string> targets;
  targets.reserve(num_frames);
  const std::size_t len = ref.size();
  for (int t = 0; t < num_frames; ++t) {
    const std::size_t idx =
        static_cast<std::size_t>(t) * len / static_cast<std::size_t>(num_frames);
    targets.push_back(ref[idx]);
  }
  return targets;
}

}  // namespace phonerr
