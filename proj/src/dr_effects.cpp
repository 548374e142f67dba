#include "spatialiv/dr_effects.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace spatialiv {

std::string to_string(AdjustmentSet a) {
  switch (a) {
    case AdjustmentSet::None: return "none";
    case AdjustmentSet::SpatialCoords: return "coords";
    case AdjustmentSet::AC: return "ac";
    case AdjustmentSet::ACPlusCoords: return "ac+coords";
  }
  return "?";
}

AdjustmentSet parse_adjustment(const std::string& s) {
  if (s == "none") return AdjustmentSet::None;
  if (s == "coords") return AdjustmentSet::SpatialCoords;
  if (s == "ac") return AdjustmentSet::AC;
  if (s == "ac+coords") return AdjustmentSet::ACPlusCoords;
  throw Error(ErrorCode::ConfigError, "unknown adjustment set '" + s + "'");
}

std::string to_string(DensityFit f) {
  return f == DensityFit::Subpopulation ? "subpopulation" : "full_truncated";
}

DensityFit parse_density_fit(const std::string& s) {
  if (s == "subpopulation") return DensityFit::Subpopulation;
  if (s == "full_truncated") return DensityFit::FullTruncated;
  throw Error(ErrorCode::ConfigError, "unknown density fit '" + s + "'");
}

AnalysisData AnalysisData::subset(const std::vector<Eigen::Index>& rows) const {
  AnalysisData out;
  out.z = z(rows, Eigen::all);
  out.a = a(rows);
  out.y = y(rows);
  out.z_names = z_names;
  return out;
}

AnalysisData make_analysis_data(const SpatialDataset& d, AdjustmentSet adjust,
                                const ExposureDecomposition* dec) {
  if (!d.outcome) throw Error(ErrorCode::InvalidDataset, "dataset has no outcome");
  const bool uses_ac = adjust == AdjustmentSet::AC || adjust == AdjustmentSet::ACPlusCoords;
  const bool uses_coords =
      adjust == AdjustmentSet::SpatialCoords || adjust == AdjustmentSet::ACPlusCoords;
  if (uses_ac && !dec) {
    throw Error(ErrorCode::InvalidArgument, "adjustment set '" + to_string(adjust) +
                                                "' needs an exposure decomposition");
  }
  if (uses_ac && dec->a_c.size() != d.n()) {
    throw Error(ErrorCode::DimensionMismatch, "decomposition does not match dataset");
  }
  AnalysisData out;
  out.a = d.exposure;
  out.y = *d.outcome;
  const Eigen::Index p = adjust == AdjustmentSet::None ? 0 : d.p();
  const Eigen::Index q = p + (uses_ac ? 1 : 0) + (uses_coords ? 2 : 0);
  out.z.resize(d.n(), q);
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < p; ++j) {
    out.z.col(k++) = d.covariates.col(j);
    out.z_names.push_back(d.covariate_names[static_cast<std::size_t>(j)]);
  }
  if (uses_ac) {
    out.z.col(k++) = dec->a_c;
    out.z_names.emplace_back("a_c");
  }
  if (uses_coords) {
    out.z.col(k++) = d.coords.col(0);
    out.z.col(k++) = d.coords.col(1);
    out.z_names.emplace_back("x");
    out.z_names.emplace_back("y");
  }
  return out;
}

namespace {

Matrix with_exposure(const Matrix& z, const Vector& a) {
  Matrix out(z.rows(), z.cols() + 1);
  out.leftCols(z.cols()) = z;
  out.col(z.cols()) = a;
  return out;
}

}  // namespace

Vector NuisanceFit::mu_at(const Matrix& z, double a) const {
  return outcome.predict(with_exposure(z, Vector::Constant(z.rows(), a)));
}

Vector NuisanceFit::mu(const Matrix& z, const Vector& a) const {
  return outcome.predict(with_exposure(z, a));
}

Vector NuisanceFit::density_mean_at(const Matrix& z) const { return density_mean.predict(z); }

double NuisanceFit::density(double a, double mean) const {
  const double u = (a - mean);
  const double f = std::exp(-0.5 * u * u / sigma2) / std::sqrt(2.0 * std::numbers::pi * sigma2);
  if (!std::isfinite(truncation)) return f;
  if (a < truncation) return 0.0;
  // upper tail mass above the truncation point
  const double tail = 0.5 * std::erfc((truncation - mean) / std::sqrt(2.0 * sigma2));
  return tail > 0.0 ? f / tail : std::numeric_limits<double>::infinity();
}

namespace {

void fit_density(NuisanceFit& nf, const AnalysisData& data, const NuisanceOptions& options) {
  std::vector<Learner> dens = options.density_learners;
  std::erase(dens, Learner::QuadraticA);
  if (dens.empty()) dens.push_back(Learner::Linear);
  nf.density_mean = StackedRegression::fit(data.z, data.a, dens, options.folds);
  const Vector resid = data.a - nf.density_mean.predict(data.z);
  nf.sigma2 = resid.squaredNorm() / static_cast<double>(data.n()) * options.density_variance_scale;
  if (!(nf.sigma2 > 0.0)) {
    throw Error(ErrorCode::SingularDesign, "exposure is a deterministic function of the adjustment set");
  }
}

}  // namespace

NuisanceFit fit_nuisances(const AnalysisData& data, const NuisanceOptions& options) {
  const Eigen::Index n = data.n();
  if (data.y.size() != n || data.z.rows() != n) {
    throw Error(ErrorCode::DimensionMismatch, "analysis data columns differ in length");
  }
  if (options.folds > n) {
    throw Error(ErrorCode::KTooLarge, "fold count " + std::to_string(options.folds) +
                                          " exceeds the " + std::to_string(n) + " units");
  }
  if (!(options.density_variance_scale > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "density variance scale must be positive");
  }
  NuisanceFit nf;
  nf.outcome = StackedRegression::fit(with_exposure(data.z, data.a), data.y,
                                      options.outcome_learners, options.folds);
  fit_density(nf, data, options);
  nf.folds.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) nf.folds[static_cast<std::size_t>(i)] = static_cast<int>(i % options.folds);
  return nf;
}

NuisanceFit fit_nuisances(const SpatialDataset& d, AdjustmentSet adjust,
                          const ExposureDecomposition* dec, const NuisanceOptions& options) {
  return fit_nuisances(make_analysis_data(d, adjust, dec), options);
}

PseudoOutcome pseudo_outcome(const AnalysisData& data, const NuisanceFit& nf, double c,
                             std::optional<std::pair<double, double>> clamp_range) {
  const Eigen::Index n = data.n();
  if (n == 0) throw Error(ErrorCode::EmptySubpopulation, "no units in the estimation population");
  const auto [lo, hi] = clamp_range.value_or(std::make_pair(data.y.minCoeff(), data.y.maxCoeff()));
  const Vector means = nf.density_mean_at(data.z);
  const Vector mu_obs = nf.mu(data.z, data.a);

  PseudoOutcome po;
  po.c = c;
  po.xi.resize(n);
  po.min_density = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ai = data.a(i);
    const double pi_i = nf.density(ai, means(i));
    double pi_bar = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) pi_bar += nf.density(ai, means(j));
    pi_bar /= static_cast<double>(n);
    const double mu_bar = nf.mu_at(data.z, ai).mean();
    po.min_density = std::min(po.min_density, pi_i);
    double xi = (data.y(i) - mu_obs(i)) / pi_i * pi_bar + mu_bar;
    if (!std::isfinite(xi)) xi = data.y(i) - mu_obs(i) >= 0.0 ? hi : lo;
    if (xi < lo || xi > hi) {
      ++po.clamped_count;
      xi = std::clamp(xi, lo, hi);
    }
    po.xi(i) = xi;
  }
  return po;
}

std::array<double, 4> psi_gradient(const std::array<double, 4>& t) {
  return {(1.0 - t[1]) / t[3], (-t[0] + t[2]) / t[3], t[1] / t[3],
          -(t[0] * (1.0 - t[1]) + t[1] * t[2]) / (t[3] * t[3])};
}

DeltaMethodResult delta_method(const Matrix& phi, const std::array<double, 4>& theta) {
  if (phi.cols() != 4) throw Error(ErrorCode::DimensionMismatch, "delta method needs 4 columns");
  if (theta[3] == 0.0) throw Error(ErrorCode::ZeroDenominator, "E(Y) estimate is zero");
  const Eigen::Index n = phi.rows();
  DeltaMethodResult out;
  out.psi = (theta[0] * (1.0 - theta[1]) + theta[2] * theta[1]) / theta[3];
  out.gradient = psi_gradient(theta);
  const Eigen::Vector4d g(out.gradient[0], out.gradient[1], out.gradient[2], out.gradient[3]);
  double var = 0.0;
  if (n > 1) {
    const Matrix centered = phi.rowwise() - phi.colwise().mean();
    const Matrix sigma = centered.transpose() * centered / static_cast<double>(n - 1);
    var = g.dot(sigma * g) / static_cast<double>(n);
  }
  out.se = std::sqrt(std::max(var, 0.0));
  out.ci_lo = out.psi - 1.96 * out.se;
  out.ci_hi = out.psi + 1.96 * out.se;
  return out;
}

Matrix influence_functions(const Vector& a, const Vector& y, double c, const Vector& xi_above,
                           double nu_hat, const Vector& weights_above,
                           const std::array<double, 4>& theta) {
  const Eigen::Index n = a.size();
  const auto nd = static_cast<double>(n);
  Matrix phi = Matrix::Zero(n, 4);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool below = a(i) < c;
    if (!below) {
      phi(i, 0) = nd * weights_above(k) * (xi_above(k) - nu_hat);
      ++k;
    }
    phi(i, 1) = (below ? 1.0 : 0.0) - theta[1];
    phi(i, 2) = below ? y(i) - theta[2] : 0.0;
    phi(i, 3) = y(i) - theta[3];
  }
  if (k != xi_above.size()) {
    throw Error(ErrorCode::DimensionMismatch, "pseudo-outcome length does not match A >= c units");
  }
  return phi;
}

TruncatedEffectEstimate truncated_effect(const AnalysisData& data, double c,
                                         const TruncatedEffectConfig& config) {
  const Eigen::Index n = data.n();
  if (n == 0) throw Error(ErrorCode::EmptySubpopulation, "no units");
  std::vector<Eigen::Index> above;
  double below_sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (data.a(i) >= c) {
      above.push_back(i);
    } else {
      below_sum += data.y(i);
    }
  }
  const auto n_below = n - static_cast<Eigen::Index>(above.size());
  TruncatedEffectEstimate est;
  est.theta[1] = static_cast<double>(n_below) / static_cast<double>(n);
  est.theta[2] = n_below > 0 ? below_sum / static_cast<double>(n_below) : 0.0;
  est.theta[3] = data.y.mean();
  est.n_above = static_cast<Eigen::Index>(above.size());
  if (est.theta[3] == 0.0) throw Error(ErrorCode::ZeroDenominator, "mean outcome is zero");

  if (above.empty()) {
    est.vacuous = true;
    est.psi = est.ci_lo = est.ci_hi = 1.0;
    return est;
  }

  const AnalysisData sub = data.subset(above);
  NuisanceFit nf = fit_nuisances(sub, config.nuisance);
  if (config.nuisance.density_fit == DensityFit::FullTruncated) {
    if (config.nuisance.folds > n) throw Error(ErrorCode::KTooLarge, "fold count exceeds the units");
    fit_density(nf, data, config.nuisance);
    nf.truncation = c;
  }
  const PseudoOutcome po = pseudo_outcome(sub, nf, c);
  const auto grid = config.bandwidths.value_or(default_bandwidth_grid(sub.a));
  const LocalLinearFit ll = local_linear(po.xi, sub.a, grid, c);

  est.theta[0] = ll.value;
  est.bandwidth = ll.bandwidth;
  est.clamped_count = po.clamped_count;
  est.min_density = po.min_density;
  const Matrix phi = influence_functions(data.a, data.y, c, po.xi, ll.value, ll.weights, est.theta);
  const auto dm = delta_method(phi, est.theta);
  est.psi = dm.psi;
  est.se = dm.se;
  est.ci_lo = dm.ci_lo;
  est.ci_hi = dm.ci_hi;
  return est;
}

TruncatedEffectEstimate truncated_effect(const SpatialDataset& d, AdjustmentSet adjust,
                                         const ExposureDecomposition* dec, double c,
                                         const TruncatedEffectConfig& config) {
  return truncated_effect(make_analysis_data(d, adjust, dec), c, config);
}

ErcCurve erc_grid(const AnalysisData& data, const GridSpec& spec, const TruncatedEffectConfig& config) {
  std::vector<double> grid;
  if (spec.values) {
    grid = *spec.values;
  } else {
    if (spec.points < 1) throw Error(ErrorCode::InvalidArgument, "grid needs at least one point");
    const std::vector<double> a(data.a.data(), data.a.data() + data.a.size());
    const double lo = stats::quantile(a, spec.lower_percentile);
    const double hi = stats::quantile(a, spec.upper_percentile);
    for (int k = 0; k < spec.points; ++k) {
      grid.push_back(spec.points == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * k / (spec.points - 1));
    }
  }
  if (grid.empty()) throw Error(ErrorCode::InvalidArgument, "empty evaluation grid");

  const NuisanceFit nf = fit_nuisances(data, config.nuisance);
  const PseudoOutcome po = pseudo_outcome(data, nf, std::nan(""));
  const auto bws = config.bandwidths.value_or(default_bandwidth_grid(data.a));
  const std::size_t k = select_bandwidth(po.xi, data.a, bws, grid);

  ErcCurve curve;
  curve.bandwidth = bws[k];
  curve.clamped_count = po.clamped_count;
  const auto n = static_cast<double>(data.n());
  for (double g : grid) {
    const auto p = local_linear_point(po.xi, data.a, curve.bandwidth, g);
    const Vector phi = n * p.weights.cwiseProduct((po.xi.array() - p.value).matrix());
    const double se = std::sqrt(stats::variance(phi) / n);
    curve.points.push_back({g, p.value, p.value - 1.96 * se, p.value + 1.96 * se, se});
  }
  return curve;
}

ErcCurve erc_grid(const SpatialDataset& d, AdjustmentSet adjust, const ExposureDecomposition* dec,
                  const GridSpec& grid, const TruncatedEffectConfig& config) {
  return erc_grid(make_analysis_data(d, adjust, dec), grid, config);
}

PolicyEffect policy_effect(const AnalysisData& data, const Policy& policy,
                           const NuisanceOptions& options) {
  const NuisanceFit nf = fit_nuisances(data, options);
  const Eigen::Index n = data.n();
  Vector shifted = data.a;
  if (policy.kind == Policy::Kind::Shift) shifted.array() += policy.value;
  if (policy.kind == Policy::Kind::Cap) shifted = shifted.cwiseMin(policy.value);

  PolicyEffect out;
  const double sd = std::sqrt(stats::variance(data.a));
  out.tolerance = 1.06 * sd * std::pow(static_cast<double>(n), -0.2);
  const double amin = data.a.minCoeff(), amax = data.a.maxCoeff();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (shifted(i) < amin - out.tolerance || shifted(i) > amax + out.tolerance) ++out.extrapolating_units;
  }
  out.positivity_warning = out.extrapolating_units > 0;

  if (policy.kind == Policy::Kind::Identity) {
    out.estimate = 0.0;
    return out;
  }
  const double observed = nf.mu(data.z, data.a).mean();
  const double counterfactual = nf.mu(data.z, shifted).mean();
  if (policy.kind == Policy::Kind::Shift) {
    out.estimate = counterfactual - observed;
  } else {
    if (observed == 0.0) throw Error(ErrorCode::ZeroDenominator, "plug-in mean outcome is zero");
    out.estimate = counterfactual / observed;
  }
  return out;
}

PolicyEffect policy_effect(const SpatialDataset& d, AdjustmentSet adjust,
                           const ExposureDecomposition* dec, const Policy& policy,
                           const NuisanceOptions& options) {
  return policy_effect(make_analysis_data(d, adjust, dec), policy, options);
}

double hausdorff(const Interval& i1, const Interval& i2) {
  for (const auto* iv : {&i1, &i2}) {
    if (!(iv->lo <= iv->hi)) {
      throw Error(ErrorCode::InvalidInterval, "interval lower bound exceeds upper bound");
    }
  }
  return std::max(std::abs(i1.lo - i2.lo), std::abs(i1.hi - i2.hi));
}

double avg_hausdorff(const std::vector<std::pair<Interval, Interval>>& pairs) {
  if (pairs.empty()) throw Error(ErrorCode::InvalidArgument, "no interval pairs");
  double total = 0.0;
  for (const auto& [a, b] : pairs) total += hausdorff(a, b);
  return total / static_cast<double>(pairs.size());
}

}  // namespace spatialiv
