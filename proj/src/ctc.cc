// phonerr/ctc.cc
//
// Log-domain forward-backward over the blank-augmented extended target.
// Indexing follows the usual CTC construction: ext[s] is blank for even s
// and y[s/2] for odd s, 0-based everywhere.

#include "phonerr/ctc.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace phonerr {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kRowSumTolerance = 1e-6;

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

double log_sum_exp(std::span<const double> values) {
  double m = kNegInf;
  for (double v : values) m = std::max(m, v);
  if (m == kNegInf) return kNegInf;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - m);
  return m + std::log(sum);
}

// Blank-extended log soft-label matrix, (N+1) x (N+1) row-major. Row c < N
// is the log of S_hat row c with zero mass on blank; the blank row is
// one-hot on blank (blank is never softened).
std::vector<double> extended_log_soft_labels(const NormalizedSimilarity& s_hat) {
  const int n = s_hat.size();
  const int width = n + 1;
  std::vector<double> log_se(static_cast<std::size_t>(width) * width, kNegInf);
  for (int c = 0; c < n; ++c) {
    for (int j = 0; j < n; ++j) {
      const double v = s_hat.at(c, j);
      log_se[static_cast<std::size_t>(c) * width + j] = v > 0.0 ? std::log(v) : kNegInf;
    }
  }
  log_se[static_cast<std::size_t>(n) * width + n] = 0.0;
  return log_se;
}

std::vector<double> identity_log_soft_labels(int num_labels) {
  std::vector<double> log_se(
      static_cast<std::size_t>(num_labels) * num_labels, kNegInf);
  for (int c = 0; c < num_labels; ++c) {
    log_se[static_cast<std::size_t>(c) * num_labels + c] = 0.0;
  }
  return log_se;
}

void check_target_fits(const TargetSeq& y, int num_labels, const char* what) {
  for (std::size_t i = 0; i < y.ids().size(); ++i) {
    if (y.ids()[i] >= num_labels - 1) {
      throw std::invalid_argument(std::string(what) + ": target phoneme '" +
                                  y.symbols()[i] + "' (id " +
                                  std::to_string(y.ids()[i]) +
                                  ") does not fit probability rows with " +
                                  std::to_string(num_labels) + " labels");
    }
  }
}

void check_grad_finite(const GradMatrix& grad, const char* what) {
  for (double v : grad.values) {
    if (!std::isfinite(v)) {
      throw std::runtime_error(std::string(what) + ": non-finite gradient entry");
    }
  }
}

// Shared soft-CTC kernel. log_se is the (N+1)^2 blank-extended log
// soft-label matrix; the identity gives classical CTC.
LossResult ctc_kernel(const ProbMatrix& frame_probs, const TargetSeq& y,
                      const std::vector<double>& log_se, const char* what) {
  const int T = frame_probs.num_rows();
  const int width = frame_probs.num_labels();  // N + 1
  const int blank = width - 1;
  check_target_fits(y, width, what);
  if (T < y.min_frames()) {
    throw std::invalid_argument(std::string(what) + ": " + std::to_string(T) +
                                " frames cannot align a target needing at least " +
                                std::to_string(y.min_frames()));
  }

  const int L = y.length();
  const int ext_len = 2 * L + 1;
  std::vector<int> ext(ext_len);
  for (int s = 0; s < ext_len; ++s) {
    ext[s] = (s % 2 == 0) ? blank : y.ids()[s / 2];
  }

  // Per-frame emission scores q_t(c) = sum_j Se(c, j) p_t(j), in log domain.
  std::vector<double> log_q(static_cast<std::size_t>(T) * width, kNegInf);
  std::vector<double> terms(width);
  for (int t = 0; t < T; ++t) {
    for (int c = 0; c < width; ++c) {
      for (int j = 0; j < width; ++j) {
        terms[j] = log_se[static_cast<std::size_t>(c) * width + j] +
                   frame_probs.log_prob(t, j);
      }
      log_q[static_cast<std::size_t>(t) * width + c] = log_sum_exp(terms);
    }
  }
  auto q = [&](int t, int c) { return log_q[static_cast<std::size_t>(t) * width + c]; };

  // Forward.
  std::vector<double> alpha(static_cast<std::size_t>(T) * ext_len, kNegInf);
  auto a = [&](int t, int s) -> double& {
    return alpha[static_cast<std::size_t>(t) * ext_len + s];
  };
  a(0, 0) = q(0, ext[0]);
  if (ext_len > 1) a(0, 1) = q(0, ext[1]);
  for (int t = 1; t < T; ++t) {
    for (int s = 0; s < ext_len; ++s) {
      double acc = a(t - 1, s);
      if (s >= 1) acc = log_add(acc, a(t - 1, s - 1));
      if (s >= 2 && ext[s] != blank && ext[s] != ext[s - 2]) {
        acc = log_add(acc, a(t - 1, s - 2));
      }
      a(t, s) = acc + q(t, ext[s]);
    }
  }
  double log_p_total = a(T - 1, ext_len - 1);
  if (ext_len > 1) log_p_total = log_add(log_p_total, a(T - 1, ext_len - 2));
  if (log_p_total == kNegInf) {
    throw std::runtime_error(std::string(what) +
                             ": every compatible alignment path has zero "
                             "probability (loss would be infinite)");
  }

  // Backward (includes the emission at its own frame, like alpha).
  std::vector<double> beta(static_cast<std::size_t>(T) * ext_len, kNegInf);
  auto b = [&](int t, int s) -> double& {
    return beta[static_cast<std::size_t>(t) * ext_len + s];
  };
  b(T - 1, ext_len - 1) = q(T - 1, ext[ext_len - 1]);
  if (ext_len > 1) b(T - 1, ext_len - 2) = q(T - 1, ext[ext_len - 2]);
  for (int t = T - 2; t >= 0; --t) {
    for (int s = 0; s < ext_len; ++s) {
      double acc = b(t + 1, s);
      if (s + 1 < ext_len) acc = log_add(acc, b(t + 1, s + 1));
      if (s + 2 < ext_len && ext[s + 2] != blank && ext[s + 2] != ext[s]) {
        acc = log_add(acc, b(t + 1, s + 2));
      }
      b(t, s) = acc + q(t, ext[s]);
    }
  }

  // Gradient with respect to the pre-softmax logits. With
  //   Gamma_t(c) = sum_{s: ext[s]=c} alpha_t(s) beta_t(s) / q_t(c)^2
  // (the path mass through label c at frame t, with both q_t factors
  // removed), the chain rule through q and the softmax gives
  //   dLoss/dlogit_t(j) = p_t(j) * sumW_t - W_t(j),
  //   W_t(j) = p_t(j) * sum_c Se(c, j) Gamma_t(c) / P.
  // Every summand of W is at most q_t(c) Gamma_t(c) / P <= 1, so the
  // exponentials cannot overflow.
  GradMatrix grad;
  grad.rows = T;
  grad.cols = width;
  grad.values.assign(static_cast<std::size_t>(T) * width, 0.0);
  std::vector<double> log_gamma(width);
  std::vector<double> w(width);
  for (int t = 0; t < T; ++t) {
    std::fill(log_gamma.begin(), log_gamma.end(), kNegInf);
    for (int s = 0; s < ext_len; ++s) {
      const double fa = a(t, s);
      const double fb = b(t, s);
      if (fa == kNegInf || fb == kNegInf) continue;
      const int c = ext[s];
      log_gamma[c] = log_add(log_gamma[c], fa + fb - 2.0 * q(t, c));
    }
    double sum_w = 0.0;
    for (int j = 0; j < width; ++j) {
      const double log_pj = frame_probs.log_prob(t, j);
      double wj = 0.0;
      if (log_pj != kNegInf) {
        for (int c = 0; c < width; ++c) {
          const double log_sc = log_se[static_cast<std::size_t>(c) * width + j];
          if (log_sc == kNegInf || log_gamma[c] == kNegInf) continue;
          wj += std::exp(log_sc + log_pj + log_gamma[c] - log_p_total);
        }
      }
      w[j] = wj;
      sum_w += wj;
    }
    for (int j = 0; j < width; ++j) {
      grad.values[static_cast<std::size_t>(t) * width + j] =
          frame_probs.prob(t, j) * sum_w - w[j];
    }
  }
  check_grad_finite(grad, what);
  return {-log_p_total, std::move(grad)};
}

}  // namespace

ProbMatrix::ProbMatrix(int rows, int cols, bool log_domain,
                       std::vector<double> log_probs)
    : rows_(rows), cols_(cols), log_domain_(log_domain),
      log_probs_(std::move(log_probs)) {}

ProbMatrix ProbMatrix::from_probs(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) {
    throw std::invalid_argument("probability matrix needs at least one row");
  }
  const int cols = static_cast<int>(rows[0].size());
  if (cols < 2) {
    throw std::invalid_argument(
        "probability rows need at least two labels (one phoneme plus blank)");
  }
  std::vector<double> log_probs;
  log_probs.reserve(rows.size() * cols);
  for (std::size_t t = 0; t < rows.size(); ++t) {
    const std::vector<double>& row = rows[t];
    if (static_cast<int>(row.size()) != cols) {
      throw std::invalid_argument("probability row " + std::to_string(t) + " has " +
                                  std::to_string(row.size()) + " entries, expected " +
                                  std::to_string(cols));
    }
    double sum = 0.0;
    for (double p : row) {
      if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument("probability row " + std::to_string(t) +
                                    " has an entry outside [0, 1]");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > kRowSumTolerance) {
      throw std::invalid_argument("probability row " + std::to_string(t) +
                                  " sums to " + std::to_string(sum));
    }
    const double log_sum = std::log(sum);
    for (double p : row) {
      log_probs.push_back(p > 0.0 ? std::log(p) - log_sum : kNegInf);
    }
  }
  return ProbMatrix(static_cast<int>(rows.size()), cols, false, std::move(log_probs));
}

ProbMatrix ProbMatrix::from_logits(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) {
    throw std::invalid_argument("logit matrix needs at least one row");
  }
  const int cols = static_cast<int>(rows[0].size());
  if (cols < 2) {
    throw std::invalid_argument(
        "logit rows need at least two labels (one phoneme plus blank)");
  }
  std::vector<double> log_probs;
  log_probs.reserve(rows.size() * cols);
  for (std::size_t t = 0; t < rows.size(); ++t) {
    const std::vector<double>& row = rows[t];
    if (static_cast<int>(row.size()) != cols) {
      throw std::invalid_argument("logit row " + std::to_string(t) + " has " +
                                  std::to_string(row.size()) + " entries, expected " +
                                  std::to_string(cols));
    }
    for (double x : row) {
      if (!std::isfinite(x)) {
        throw std::invalid_argument("logit row " + std::to_string(t) +
                                    " has a non-finite entry");
      }
    }
    const double log_sum = log_sum_exp(row);
    for (double x : row) log_probs.push_back(x - log_sum);
  }
  return ProbMatrix(static_cast<int>(rows.size()), cols, true, std::move(log_probs));
}

double ProbMatrix::prob(int t, int j) const { return std::exp(log_prob(t, j)); }

TargetSeq::TargetSeq(std::vector<std::string> symbols,
                     const PhonemeInventory& inventory)
    : symbols_(std::move(symbols)) {
  if (symbols_.empty()) {
    throw std::invalid_argument("target sequence is empty");
  }
  ids_.reserve(symbols_.size());
  for (const std::string& s : symbols_) ids_.push_back(inventory.id_of(s));
  min_frames_ = static_cast<int>(ids_.size());
  for (std::size_t i = 1; i < ids_.size(); ++i) {
    if (ids_[i] == ids_[i - 1]) ++min_frames_;
  }
}

double GradMatrix::norm() const {
  double sum = 0.0;
  for (double v : values) sum += v * v;
  return std::sqrt(sum);
}

LossResult soft_ctc_loss(const ProbMatrix& frame_probs, const TargetSeq& y,
                         const NormalizedSimilarity& s_hat) {
  if (s_hat.size() + 1 != frame_probs.num_labels()) {
    throw std::invalid_argument("soft_ctc_loss: probability rows have " +
                                std::to_string(frame_probs.num_labels()) +
                                " labels but the similarity matrix covers " +
                                std::to_string(s_hat.size()) + " phonemes");
  }
  return ctc_kernel(frame_probs, y, extended_log_soft_labels(s_hat), "soft_ctc_loss");
}

LossResult standard_ctc_loss(const ProbMatrix& frame_probs, const TargetSeq& y) {
  return ctc_kernel(frame_probs, y, identity_log_soft_labels(frame_probs.num_labels()),
                    "standard_ctc_loss");
}

LossResult soft_mapping_loss(const ProbMatrix& step_probs, const TargetSeq& y,
                             const NormalizedSimilarity& s_hat) {
  const int width = step_probs.num_labels();
  if (s_hat.size() + 1 != width) {
    throw std::invalid_argument("soft_mapping_loss: probability rows have " +
                                std::to_string(width) +
                                " labels but the similarity matrix covers " +
                                std::to_string(s_hat.size()) + " phonemes");
  }
  if (step_probs.num_rows() != y.length()) {
    throw std::invalid_argument("soft_mapping_loss: " +
                                std::to_string(step_probs.num_rows()) +
                                " probability rows for " + std::to_string(y.length()) +
                                " target steps (one row per step required)");
  }
  check_target_fits(y, width, "soft_mapping_loss");

  const int blank = width - 1;
  double loss = 0.0;
  GradMatrix grad;
  grad.rows = y.length();
  grad.cols = width;
  grad.values.assign(static_cast<std::size_t>(grad.rows) * width, 0.0);
  std::vector<double> dp(width);
  for (int t = 0; t < y.length(); ++t) {
    const int target = y.ids()[t];
    double dot = 0.0;  // sum_j p_t(j) * dLoss/dp_t(j), for the softmax chain
    for (int j = 0; j < width; ++j) {
      const double soft = (j == blank) ? 0.0 : s_hat.at(target, j);
      const double diff = step_probs.prob(t, j) - soft;
      loss += diff * diff;
      dp[j] = 2.0 * diff;
      dot += step_probs.prob(t, j) * dp[j];
    }
    for (int j = 0; j < width; ++j) {
      grad.values[static_cast<std::size_t>(t) * width + j] =
          step_probs.prob(t, j) * (dp[j] - dot);
    }
  }
  check_grad_finite(grad, "soft_mapping_loss");
  return {loss, std::move(grad)};
}

LossValue combined_loss(const ProbMatrix& frame_probs, const ProbMatrix& step_probs,
                        const TargetSeq& y, const NormalizedSimilarity& s_hat,
                        double lambda_ctc, double lambda_map) {
  if (!(lambda_ctc >= 0.0) || !(lambda_map >= 0.0)) {
    throw std::invalid_argument("loss weights must be nonnegative");
  }
  LossValue value;
  value.lambda_ctc = lambda_ctc;
  value.lambda_map = lambda_map;
  value.ctc_part = soft_ctc_loss(frame_probs, y, s_hat).loss;
  value.map_part = soft_mapping_loss(step_probs, y, s_hat).loss;
  value.total = lambda_ctc * value.ctc_part + lambda_map * value.map_part;
  return value;
}

std::vector<std::string> greedy_decode(const ProbMatrix& frame_probs,
                                       const PhonemeInventory& inventory) {
  if (inventory.num_phonemes() + 1 != frame_probs.num_labels()) {
    throw std::invalid_argument("greedy_decode: probability rows have " +
                                std::to_string(frame_probs.num_labels()) +
                                " labels but the inventory has " +
                                std::to_string(inventory.num_phonemes()) +
                                " phonemes plus blank");
  }
  const int width = frame_probs.num_labels();
  const int blank = width - 1;
  std::vector<std::string> decoded;
  int previous = blank;
  for (int t = 0; t < frame_probs.num_rows(); ++t) {
    int best = 0;
    for (int j = 1; j < width; ++j) {
      if (frame_probs.log_prob(t, j) > frame_probs.log_prob(t, best)) best = j;
    }
    if (best != previous && best != blank) {
      decoded.push_back(inventory.symbol(best));
    }
    previous = best;
  }
  return decoded;
}

namespace {

struct BeamScore {
  double blank_end = kNegInf;     // log prob of paths ending in blank
  double label_end = kNegInf;     // log prob of paths ending in the last label
  double total() const { return log_add(blank_end, label_end); }
};

bool beam_order_before(const std::pair<std::vector<int>, double>& lhs,
                       const std::pair<std::vector<int>, double>& rhs) {
  if (lhs.second != rhs.second) return lhs.second > rhs.second;
  if (lhs.first.size() != rhs.first.size()) return lhs.first.size() < rhs.first.size();
  return lhs.first < rhs.first;
}

}  // namespace

std::vector<std::string> beam_decode(const ProbMatrix& frame_probs,
                                     const PhonemeInventory& inventory,
                                     std::size_t beam_width) {
  if (beam_width < 1) {
    throw std::invalid_argument("beam width must be at least 1");
  }
  if (inventory.num_phonemes() + 1 != frame_probs.num_labels()) {
    throw std::invalid_argument("beam_decode: probability rows have " +
                                std::to_string(frame_probs.num_labels()) +
                                " labels but the inventory has " +
                                std::to_string(inventory.num_phonemes()) +
                                " phonemes plus blank");
  }
  const int width = frame_probs.num_labels();
  const int blank = width - 1;

  std::map<std::vector<int>, BeamScore> beams;
  beams[{}] = BeamScore{0.0, kNegInf};

  for (int t = 0; t < frame_probs.num_rows(); ++t) {
    std::map<std::vector<int>, BeamScore> next;
    for (const auto& [prefix, score] : beams) {
      const int last = prefix.empty() ? -1 : prefix.back();
      for (int k = 0; k < width; ++k) {
        const double log_p = frame_probs.log_prob(t, k);
        if (log_p == kNegInf) continue;
        if (k == blank) {
          BeamScore& out = next[prefix];
          out.blank_end = log_add(out.blank_end, score.total() + log_p);
        } else if (k == last) {
          // Same label extends the run without growing the prefix...
          BeamScore& same = next[prefix];
          same.label_end = log_add(same.label_end, score.label_end + log_p);
          // ...and starts a new occurrence after a blank.
          std::vector<int> grown = prefix;
          grown.push_back(k);
          BeamScore& out = next[grown];
          out.label_end = log_add(out.label_end, score.blank_end + log_p);
        } else {
          std::vector<int> grown = prefix;
          grown.push_back(k);
          BeamScore& out = next[grown];
          out.label_end = log_add(out.label_end, score.total() + log_p);
        }
      }
    }

    if (beam_width != kExhaustiveBeam && next.size() > beam_width) {
      std::vector<std::pair<std::vector<int>, double>> ranked;
      ranked.reserve(next.size());
      for (const auto& [prefix, score] : next) {
        ranked.emplace_back(prefix, score.total());
      }
      std::sort(ranked.begin(), ranked.end(), beam_order_before);
      std::map<std::vector<int>, BeamScore> pruned;
      for (std::size_t i = 0; i < beam_width; ++i) {
        pruned[ranked[i].first] = next[ranked[i].first];
      }
      next = std::move(pruned);
    }
    beams = std::move(next);
  }

  std::pair<std::vector<int>, double> best{{}, kNegInf};
  bool first = true;
  for (const auto& [prefix, score] : beams) {
    std::pair<std::vector<int>, double> candidate{prefix, score.total()};
    if (first || beam_order_before(candidate, best)) {
      best = std::move(candidate);
      first = false;
    }
  }

  std::vector<std::string> decoded;
  decoded.reserve(best.first.size());
  for (int id : best.first) decoded.push_back(inventory.symbol(id));
  return decoded;
}

FitResult fit_logits_demo(const TargetSeq& y, const NormalizedSimilarity& s_hat,
                          int num_frames, int steps, double learning_rate,
                          const FitOptions& options) {
  if (steps < 1) {
    throw std::invalid_argument("fit_logits_demo: steps must be at least 1");
  }
  if (!(learning_rate > 0.0)) {
    throw std::invalid_argument("fit_logits_demo: learning rate must be positive");
  }
  if (num_frames < y.min_frames()) {
    throw std::invalid_argument("fit_logits_demo: " + std::to_string(num_frames) +
                                " frames cannot align a target needing at least " +
                                std::to_string(y.min_frames()));
  }
  if (!(options.lambda_ctc >= 0.0) || !(options.lambda_map >= 0.0)) {
    throw std::invalid_argument("fit_logits_demo: loss weights must be nonnegative");
  }

  const int width = s_hat.size() + 1;
  const int num_steps_rows = y.length();
  const double ctc_scale = options.mean_normalize ? 1.0 / num_frames : 1.0;
  const double map_scale = options.mean_normalize ? 1.0 / num_steps_rows : 1.0;

  std::vector<std::vector<double>> frame_logits(
      num_frames, std::vector<double>(width, 0.0));
  std::vector<std::vector<double>> step_logits(
      num_steps_rows, std::vector<double>(width, 0.0));

  struct Eval {
    LossResult ctc;
    LossResult map;
    double total = 0.0;
  };
  auto evaluate = [&](const std::vector<std::vector<double>>& fl,
                      const std::vector<std::vector<double>>& sl) {
    Eval e;
    e.ctc = soft_ctc_loss(ProbMatrix::from_logits(fl), y, s_hat);
    e.map = soft_mapping_loss(ProbMatrix::from_logits(sl), y, s_hat);
    e.total = options.lambda_ctc * ctc_scale * e.ctc.loss +
              options.lambda_map * map_scale * e.map.loss;
    return e;
  };

  Eval current = evaluate(frame_logits, step_logits);
  FitResult result;
  result.loss_history.push_back(current.total);

  double lr = learning_rate;
  constexpr double kMinLr = 1e-18;
  for (int step = 0; step < steps && lr > kMinLr; ++step) {
    const double frame_factor = options.lambda_ctc * ctc_scale;
    const double step_factor = options.lambda_map * map_scale;
    bool accepted = false;
    while (lr > kMinLr) {
      std::vector<std::vector<double>> new_frames = frame_logits;
      std::vector<std::vector<double>> new_steps = step_logits;
      for (int t = 0; t < num_frames; ++t) {
        for (int j = 0; j < width; ++j) {
          new_frames[t][j] -= lr * frame_factor * current.ctc.grad.at(t, j);
        }
      }
      for (int t = 0; t < num_steps_rows; ++t) {
        for (int j = 0; j < width; ++j) {
          new_steps[t][j] -= lr * step_factor * current.map.grad.at(t, j);
        }
      }
      Eval candidate = evaluate(new_frames, new_steps);
      if (candidate.total <= current.total) {
        frame_logits = std::move(new_frames);
        step_logits = std::move(new_steps);
        current = std::move(candidate);
        accepted = true;
        lr *= 1.1;
        break;
      }
      lr *= 0.5;
    }
    if (!accepted) break;
    result.loss_history.push_back(current.total);
    ++result.steps_taken;
  }

  result.final_loss.lambda_ctc = options.lambda_ctc;
  result.final_loss.lambda_map = options.lambda_map;
  result.final_loss.ctc_part = ctc_scale * current.ctc.loss;
  result.final_loss.map_part = map_scale * current.map.loss;
  result.final_loss.total = options.lambda_ctc * result.final_loss.ctc_part +
                            options.lambda_map * result.final_loss.map_part;
  result.decoded =
      greedy_decode(ProbMatrix::from_logits(frame_logits), s_hat.inventory());
  return result;
}

}  // namespace phonerr
