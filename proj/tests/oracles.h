// Test-side oracles, deliberately independent of the library's DP / log-domain
// implementations: plain recursion and exhaustive enumeration only.

#ifndef PHONERR_TESTS_ORACLES_H_
#define PHONERR_TESTS_ORACLES_H_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace oracles {

// Minimal unit edit cost by exhaustive recursion (no memoization).
inline int edit_cost_rec(const std::vector<std::string>& ref,
                         const std::vector<std::string>& hyp, std::size_t i,
                         std::size_t j) {
  if (i == ref.size()) return static_cast<int>(hyp.size() - j);
  if (j == hyp.size()) return static_cast<int>(ref.size() - i);
  int best = (ref[i] == hyp[j] ? 0 : 1) + edit_cost_rec(ref, hyp, i + 1, j + 1);
  best = std::min(best, 1 + edit_cost_rec(ref, hyp, i + 1, j));  // delete
  best = std::min(best, 1 + edit_cost_rec(ref, hyp, i, j + 1));  // insert
  return best;
}

inline int brute_force_edit_cost(const std::vector<std::string>& ref,
                                 const std::vector<std::string>& hyp) {
  return edit_cost_rec(ref, hyp, 0, 0);
}

// Collapse a label-with-blank path: merge repeats, then drop blanks.
inline std::vector<int> collapse_path(const std::vector<int>& path, int blank) {
  std::vector<int> out;
  int previous = blank;
  for (int label : path) {
    if (label != previous && label != blank) out.push_back(label);
    previous = label;
  }
  return out;
}

// Enumerates every length-T path over {0..width-1} and sums the emission
// products of those collapsing to the target. probs are linear T x width
// rows; soft_ext is the (width x width) blank-extended soft-label matrix
// (identity for standard CTC). Returns the linear-domain path sum.
inline double brute_force_ctc_path_sum(const std::vector<std::vector<double>>& probs,
                                       const std::vector<std::vector<double>>& soft_ext,
                                       const std::vector<int>& target) {
  const int T = static_cast<int>(probs.size());
  const int width = static_cast<int>(probs[0].size());
  const int blank = width - 1;
  std::vector<int> path(T, 0);
  double sum = 0.0;
  while (true) {
    if (collapse_path(path, blank) == target) {
      double product = 1.0;
      for (int t = 0; t < T; ++t) {
        double q = 0.0;
        for (int j = 0; j < width; ++j) q += soft_ext[path[t]][j] * probs[t][j];
        product *= q;
      }
      sum += product;
    }
    int t = T - 1;
    while (t >= 0 && path[t] == width - 1) path[t--] = 0;
    if (t < 0) break;
    ++path[t];
  }
  return sum;
}

// Exact total probability of every collapsed labeling.
inline std::map<std::vector<int>, double> brute_force_labeling_probs(
    const std::vector<std::vector<double>>& probs) {
  const int T = static_cast<int>(probs.size());
  const int width = static_cast<int>(probs[0].size());
  const int blank = width - 1;
  std::map<std::vector<int>, double> totals;
  std::vector<int> path(T, 0);
  while (true) {
    double product = 1.0;
    for (int t = 0; t < T; ++t) product *= probs[t][path[t]];
    totals[collapse_path(path, blank)] += product;
    int t = T - 1;
    while (t >= 0 && path[t] == width - 1) path[t--] = 0;
    if (t < 0) break;
    ++path[t];
  }
  return totals;
}

// Gradient-check comparison: relative for meaningful entries, tight absolute
// for near-zero ones (central differences bottom out around 1e-11 there).
inline bool grad_entries_close(double analytic, double numeric,
                               double rel_tol = 1e-4, double zero_tol = 1e-8) {
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  if (scale < 1e-6) return std::abs(analytic - numeric) <= zero_tol;
  return std::abs(analytic - numeric) / scale <= rel_tol;
}

}  // namespace oracles

#endif  // PHONERR_TESTS_ORACLES_H_
