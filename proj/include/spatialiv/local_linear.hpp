#ifndef SPATIALIV_LOCAL_LINEAR_HPP
#define SPATIALIV_LOCAL_LINEAR_HPP

#include <vector>

#include "spatialiv/numkernel.hpp"

namespace spatialiv {

/// Value and linear-smoother weights of a Gaussian-kernel local linear fit at
/// one point. Weights sum to 1. When the local design is degenerate (all
/// kernel mass at one exposure value) the fit falls back to a local constant.
struct SmootherPoint {
  double value = 0.0;
  Vector weights;
  double effective_points = 0.0;  // Kish effective sample size of the kernel weights
};

SmootherPoint local_linear_point(const Vector& response, const Vector& x, double bandwidth,
                                 double eval_at);

/// 20 log-spaced bandwidths from 0.05 sd(x) to 2 sd(x).
std::vector<double> default_bandwidth_grid(const Vector& x);

/// Leave-one-out CV score for each bandwidth (infinite when some hat
/// diagonal reaches 1).
std::vector<double> loo_cv_scores(const Vector& response, const Vector& x,
                                  const std::vector<double>& bandwidths);

struct LocalLinearFit {
  double value = 0.0;
  double bandwidth = 0.0;
  Vector weights;
  std::vector<double> cv_scores;
};

/// Bandwidth chosen by leave-one-out CV (ties go to the smaller bandwidth).
/// If the chosen window has fewer than 3 effective points at `eval_at`, the
/// next larger grid bandwidth is used; DegenerateWindow when none qualifies.
LocalLinearFit local_linear(const Vector& response, const Vector& x,
                            const std::vector<double>& bandwidths, double eval_at);

/// Index of the CV-selected bandwidth, after the effective-window check at
/// every point in `eval_points`.
std::size_t select_bandwidth(const Vector& response, const Vector& x,
                             const std::vector<double>& bandwidths,
                             const std::vector<double>& eval_points,
                             std::vector<double>* scores = nullptr);

}  // namespace spatialiv

#endif
