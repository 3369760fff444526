// phonerr/metrics.h
//
// Pronunciation-difference metrics: edit-distance alignment with backtrace,
// PER, similarity-weighted PER, and the articulatory error rate. All
// functions are pure and safe to call concurrently.

#ifndef PHONERR_METRICS_H_
#define PHONERR_METRICS_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "phonerr/inventory.h"
#include "phonerr/similarity.h"

namespace phonerr {

enum class EditKind { Match, Substitute, Insert, Delete };

struct EditOp {
  EditKind kind;
  std::optional<std::string> ref;  // set for match/substitute/delete
  std::optional<std::string> hyp;  // set for match/substitute/insert

  bool operator==(const EditOp&) const = default;
};

struct AlignmentResult {
  std::vector<EditOp> ops;  // in reference order; replays ref -> hyp
  int matches = 0;
  int substitutions = 0;
  int insertions = 0;
  int deletions = 0;
  int ref_len = 0;  // == matches + substitutions + deletions
};

// Levenshtein-minimal alignment with unit substitute/insert/delete costs.
// Ties break match > substitute > delete > insert at each backtrace step.
AlignmentResult align(std::span<const std::string> ref,
                      std::span<const std::string> hyp,
                      const PhonemeInventory& inventory);

// Same DP with substitution cost 1 - S[ref][hyp]: among all alignments this
// one minimizes the weighted error sum, so it gives the lowest WPER.
AlignmentResult align_weighted(std::span<const std::string> ref,
                               std::span<const std::string> hyp,
                               const SimilarityMatrix& similarity);

// (substitutions + insertions + deletions) / ref_len. Not clamped;
// insertions can push it past 1.
double per(const AlignmentResult& alignment);

// (deletions + sum over substituted pairs of (1 - S[ref][hyp]) + insertions)
// / ref_len. Equal to per() when S is the identity.
double wper(const AlignmentResult& alignment, const SimilarityMatrix& similarity);

// Per-frame articulatory features with a target phoneme for each frame.
struct ArticulatoryTrack {
  std::vector<std::vector<double>> frames;  // T x D, finite
  std::vector<std::string> frame_targets;   // length T, inventory symbols
};

// Fraction of frames whose L2 distance to their target phoneme's reference
// vector exceeds tau = tau_factor * (largest pairwise reference distance).
double aer(const ArticulatoryTrack& track, const EmbeddingTable& refs,
           double tau_factor = 0.5);

// Uniformly partitions num_frames frames across the reference sequence, for
// tracks that come without an external frame-level alignment.
std::vector<std::string> uniform_frame_targets(std::span<const std::string> ref,
                                               int num_frames);

}  // namespace phonerr

#endif  // PHONERR_METRICS_H_
