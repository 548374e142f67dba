#include "spatialiv/local_linear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace spatialiv {

namespace {

constexpr double kMinEffectivePoints = 3.0;

// Kernel weights and the local-linear equivalent kernel at x0.
void equivalent_kernel(const Vector& x, double h, double x0, Vector& out, double& eff) {
  const Eigen::Index n = x.size();
  Vector w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = (x(i) - x0) / h;
    w(i) = std::exp(-0.5 * u * u);
  }
  const double s0 = w.sum();
  const double s00 = w.squaredNorm();
  eff = s00 > 0.0 ? s0 * s0 / s00 : 0.0;
  if (!(s0 > 0.0)) {
    out = Vector::Constant(n, std::numeric_limits<double>::quiet_NaN());
    return;
  }
  const Vector d = x.array() - x0;
  const double s1 = w.dot(d);
  const double s2 = w.dot(d.cwiseAbs2());
  const double det = s0 * s2 - s1 * s1;
  // degenerate local design: no spread of x under the kernel
  if (!(det > 1e-12 * s0 * s2) || s2 == 0.0) {
    out = w / s0;
    return;
  }
  out = w.array() * (s2 - d.array() * s1) / det;
}

}  // namespace

SmootherPoint local_linear_point(const Vector& response, const Vector& x, double bandwidth,
                                 double eval_at) {
  if (response.size() != x.size()) throw Error(ErrorCode::DimensionMismatch, "smoother sizes");
  if (!(bandwidth > 0.0)) throw Error(ErrorCode::InvalidArgument, "bandwidth must be positive");
  SmootherPoint p;
  equivalent_kernel(x, bandwidth, eval_at, p.weights, p.effective_points);
  p.value = p.weights.dot(response);
  return p;
}

std::vector<double> default_bandwidth_grid(const Vector& x) {
  double sd = std::sqrt(stats::variance(x));
  if (!(sd > 0.0)) sd = 1.0;
  std::vector<double> grid(20);
  const double lo = std::log(0.05 * sd), hi = std::log(2.0 * sd);
  for (int k = 0; k < 20; ++k) grid[static_cast<std::size_t>(k)] = std::exp(lo + (hi - lo) * k / 19.0);
  return grid;
}

std::vector<double> loo_cv_scores(const Vector& response, const Vector& x,
                                  const std::vector<double>& bandwidths) {
  const Eigen::Index n = x.size();
  std::vector<double> scores;
  Vector weights;
  for (double h : bandwidths) {
    double score = 0.0;
    for (Eigen::Index i = 0; i < n && std::isfinite(score); ++i) {
      double eff = 0.0;
      equivalent_kernel(x, h, x(i), weights, eff);
      const double leverage = weights(i);
      if (!std::isfinite(leverage) || 1.0 - leverage < 1e-10) {
        score = std::numeric_limits<double>::infinity();
        break;
      }
      const double r = (response(i) - weights.dot(response)) / (1.0 - leverage);
      score += r * r;
    }
    scores.push_back(score / static_cast<double>(n));
  }
  return scores;
}

std::size_t select_bandwidth(const Vector& response, const Vector& x,
                             const std::vector<double>& bandwidths,
                             const std::vector<double>& eval_points, std::vector<double>* scores_out) {
  if (x.size() < 5) {
    throw Error(ErrorCode::DegenerateWindow,
                "local linear smoothing needs at least 5 points, got " + std::to_string(x.size()));
  }
  if (bandwidths.empty()) throw Error(ErrorCode::InvalidArgument, "empty bandwidth grid");
  std::vector<double> grid = bandwidths;
  if (!std::is_sorted(grid.begin(), grid.end())) {
    throw Error(ErrorCode::InvalidArgument, "bandwidth grid must be ascending");
  }
  for (double h : grid) {
    if (!(h > 0.0)) throw Error(ErrorCode::InvalidArgument, "bandwidths must be positive");
  }
  const auto scores = loo_cv_scores(response, x, grid);
  std::size_t best = 0;
  for (std::size_t k = 1; k < scores.size(); ++k) {
    if (scores[k] < scores[best] * (1.0 - 1e-12)) best = k;
  }
  if (!std::isfinite(scores[best])) best = 0;
  if (scores_out) *scores_out = scores;

  Vector w;
  for (std::size_t k = best; k < grid.size(); ++k) {
    bool ok = true;
    for (double e : eval_points) {
      double eff = 0.0;
      equivalent_kernel(x, grid[k], e, w, eff);
      if (!(eff >= kMinEffectivePoints)) {
        ok = false;
        break;
      }
    }
    if (ok) return k;
  }
  throw Error(ErrorCode::DegenerateWindow,
              "no bandwidth in the grid gives at least 3 effective points at the evaluation point");
}

LocalLinearFit local_linear(const Vector& response, const Vector& x,
                            const std::vector<double>& bandwidths, double eval_at) {
  LocalLinearFit fit;
  const std::size_t k = select_bandwidth(response, x, bandwidths, {eval_at}, &fit.cv_scores);
  fit.bandwidth = bandwidths[k];
  auto p = local_linear_point(response, x, fit.bandwidth, eval_at);
  fit.value = p.value;
  fit.weights = std::move(p.weights);
  return fit;
}

}  // namespace spatialiv
