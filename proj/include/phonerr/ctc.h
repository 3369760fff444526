// phonerr/ctc.h
//
// The soft multi-task training objective: soft-CTC loss (similarity-weighted
// emissions), soft-mapping loss (squared error against soft labels), their
// weighted combination, standard CTC as the identity-similarity special
// case, greedy/beam decoding, and a small logit-fitting demonstration.
//
// All losses run in the log domain and return analytic gradients with
// respect to the pre-softmax logits (the probability-simplex map is folded
// into the loss, so finite-difference checks are well-posed).

#ifndef PHONERR_CTC_H_
#define PHONERR_CTC_H_

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "phonerr/inventory.h"
#include "phonerr/similarity.h"

namespace phonerr {

// T x (N+1) rows of per-frame (or per-target-step) scores over the phonemes
// plus blank; the last column is the blank. Rows are normalized internally:
// from_probs() expects each row to sum to 1 within 1e-6 with entries in
// [0, 1], from_logits() accepts any finite reals and treats them as
// unnormalized log probabilities.
class ProbMatrix {
 public:
  static ProbMatrix from_probs(const std::vector<std::vector<double>>& rows);
  static ProbMatrix from_logits(const std::vector<std::vector<double>>& rows);

  int num_rows() const { return rows_; }
  int num_labels() const { return cols_; }  // N + 1
  bool log_domain() const { return log_domain_; }
  double log_prob(int t, int j) const {
    return log_probs_[static_cast<std::size_t>(t) * cols_ + j];
  }
  double prob(int t, int j) const;

 private:
  ProbMatrix(int rows, int cols, bool log_domain, std::vector<double> log_probs);

  int rows_ = 0;
  int cols_ = 0;
  bool log_domain_ = false;
  std::vector<double> log_probs_;  // row-major, log-softmax normalized
};

// Target phoneme sequence (no blanks), resolved against an inventory.
class TargetSeq {
 public:
  TargetSeq(std::vector<std::string> symbols, const PhonemeInventory& inventory);

  const std::vector<std::string>& symbols() const { return symbols_; }
  const std::vector<int>& ids() const { return ids_; }
  int length() const { return static_cast<int>(ids_.size()); }
  // Minimum feasible frame count for CTC: |y| plus one separating blank per
  // adjacent equal pair.
  int min_frames() const { return min_frames_; }

 private:
  std::vector<std::string> symbols_;
  std::vector<int> ids_;
  int min_frames_ = 0;
};

struct LossValue {
  double total = 0.0;
  double ctc_part = 0.0;
  double map_part = 0.0;
  double lambda_ctc = 0.0;
  double lambda_map = 0.0;
};

// d(loss)/d(logits), same shape as the input rows. Finite everywhere.
struct GradMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;  // row-major

  double at(int t, int j) const {
    return values[static_cast<std::size_t>(t) * cols + j];
  }
  double norm() const;  // Frobenius
};

struct LossResult {
  double loss = 0.0;
  GradMatrix grad;
};

inline constexpr double kDefaultLambdaCtc = 0.8;
inline constexpr double kDefaultLambdaMap = 0.2;

// -log of the path sum over all blank-augmented alignments of y, where the
// per-frame emission score of label c is q_t(c) = sum_j S_hat(c, j) p_t(j).
// S_hat is extended with a blank row/column that is one-hot on blank (blank
// is never softened). Throws if T is infeasible or every compatible path has
// zero mass.
LossResult soft_ctc_loss(const ProbMatrix& frame_probs, const TargetSeq& y,
                         const NormalizedSimilarity& s_hat);

// Classical CTC negative log likelihood; identical to soft_ctc_loss with the
// identity S_hat (same kernel, so the equality is bit-for-bit).
LossResult standard_ctc_loss(const ProbMatrix& frame_probs, const TargetSeq& y);

// Sum over target steps of the squared difference between each probability
// row and the soft label of y_t (S_hat row, blank-extended with zero mass).
// step_probs must have exactly |y| rows.
LossResult soft_mapping_loss(const ProbMatrix& step_probs, const TargetSeq& y,
                             const NormalizedSimilarity& s_hat);

LossValue combined_loss(const ProbMatrix& frame_probs, const ProbMatrix& step_probs,
                        const TargetSeq& y, const NormalizedSimilarity& s_hat,
                        double lambda_ctc = kDefaultLambdaCtc,
                        double lambda_map = kDefaultLambdaMap);

// Per-frame argmax (ties break toward the lowest index), collapse repeats,
// drop blanks.
std::vector<std::string> greedy_decode(const ProbMatrix& frame_probs,
                                       const PhonemeInventory& inventory);

inline constexpr std::size_t kExhaustiveBeam = std::numeric_limits<std::size_t>::max();

// Prefix beam search over collapsed labelings maximizing total CTC
// probability. Deterministic tie-breaking (score, then shorter, then
// lexicographically smaller prefix); kExhaustiveBeam disables pruning.
std::vector<std::string> beam_decode(const ProbMatrix& frame_probs,
                                     const PhonemeInventory& inventory,
                                     std::size_t beam_width);

struct FitOptions {
  double lambda_ctc = kDefaultLambdaCtc;
  double lambda_map = kDefaultLambdaMap;
  // Optimize per-frame / per-step means instead of the plain sums; the
  // reported LossValue uses whichever form was optimized.
  bool mean_normalize = false;
};

struct FitResult {
  LossValue final_loss;
  std::vector<std::string> decoded;   // greedy decode of the fitted frames
  std::vector<double> loss_history;   // accepted-step totals, nonincreasing
  int steps_taken = 0;
};

// Gradient descent on unconstrained logit matrices (a T x (N+1) frame matrix
// for the CTC part and a |y| x (N+1) step matrix for the mapping part), rows
// mapped to probabilities by exponential normalization. Step-halving on any
// loss increase keeps the accepted-loss sequence monotone nonincreasing.
FitResult fit_logits_demo(const TargetSeq& y, const NormalizedSimilarity& s_hat,
                          int num_frames, int steps, double learning_rate,
                          const FitOptions& options = {});

}  // namespace phonerr

#endif  // PHONERR_CTC_H_
