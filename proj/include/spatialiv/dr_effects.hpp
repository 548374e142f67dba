#ifndef SPATIALIV_DR_EFFECTS_HPP
#define SPATIALIV_DR_EFFECTS_HPP

#include <array>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spatialiv/basis.hpp"
#include "spatialiv/learners.hpp"
#include "spatialiv/local_linear.hpp"

namespace spatialiv {

enum class AdjustmentSet { None, SpatialCoords, AC, ACPlusCoords };

std::string to_string(AdjustmentSet a);
AdjustmentSet parse_adjustment(const std::string& s);

/// Adjustment variables Z, exposure A and outcome Y for the units being analysed.
struct AnalysisData {
  Matrix z;
  Vector a;
  Vector y;
  std::vector<std::string> z_names;

  Eigen::Index n() const noexcept { return a.size(); }
  AnalysisData subset(const std::vector<Eigen::Index>& rows) const;
};

/// Z = [covariates (unless None), a_c (A_C sets), x, y (coordinate sets)].
AnalysisData make_analysis_data(const SpatialDataset& d, AdjustmentSet adjust,
                                const ExposureDecomposition* dec);

/// Where the truncated-effect density model is fitted. `Subpopulation` fits the
/// Gaussian on the A >= c units; `FullTruncated` fits it on every unit and
/// conditions on A >= c, pi(a | z) / P(A >= c | z).
enum class DensityFit { Subpopulation, FullTruncated };

std::string to_string(DensityFit f);
DensityFit parse_density_fit(const std::string& s);

struct NuisanceOptions {
  int folds = 5;
  std::vector<Learner> outcome_learners{Learner::Mean, Learner::Linear, Learner::Interactions,
                                        Learner::QuadraticA};
  std::vector<Learner> density_learners{Learner::Mean, Learner::Linear, Learner::Interactions};
  /// Multiplies the fitted residual variance; 1 leaves the density model as fitted.
  double density_variance_scale = 1.0;
  DensityFit density_fit = DensityFit::Subpopulation;
};

/// Outcome regression mu(z, a) and Gaussian conditional density pi(a | z).
struct NuisanceFit {
  StackedRegression outcome;       // inputs [Z, A]
  StackedRegression density_mean;  // inputs [Z]
  double sigma2 = 1.0;
  /// Lower truncation point of the density; -inf for an untruncated Gaussian.
  double truncation = -std::numeric_limits<double>::infinity();
  std::vector<int> folds;

  const Vector& learner_weights() const noexcept { return outcome.weights(); }
  /// mu at every row of z with a common exposure value.
  Vector mu_at(const Matrix& z, double a) const;
  Vector mu(const Matrix& z, const Vector& a) const;
  Vector density_mean_at(const Matrix& z) const;
  double density(double a, double mean) const;
};

NuisanceFit fit_nuisances(const AnalysisData& data, const NuisanceOptions& options = {});
NuisanceFit fit_nuisances(const SpatialDataset& d, AdjustmentSet adjust,
                          const ExposureDecomposition* dec, const NuisanceOptions& options = {});

struct PseudoOutcome {
  Vector xi;
  std::int64_t clamped_count = 0;
  double c = 0.0;
  double min_density = 0.0;
};

/// Doubly robust pseudo-outcome for every unit of `data`:
///   xi_i = (Y_i - mu(Z_i, A_i)) / pi(A_i | Z_i) * mean_j pi(A_i | Z_j) + mean_j mu(Z_j, A_i),
/// with averages over the units of `data`, clamped to `clamp_range` (default:
/// the observed outcome range).
PseudoOutcome pseudo_outcome(const AnalysisData& data, const NuisanceFit& nf, double c,
                             std::optional<std::pair<double, double>> clamp_range = std::nullopt);

struct TruncatedEffectConfig {
  NuisanceOptions nuisance{};
  std::optional<std::vector<double>> bandwidths;  // default grid from the A >= c exposures
};

struct TruncatedEffectEstimate {
  double psi = 1.0;
  std::array<double, 4> theta{0.0, 0.0, 0.0, 0.0};
  double ci_lo = 1.0;
  double ci_hi = 1.0;
  double se = 0.0;
  double bandwidth = 0.0;
  std::int64_t clamped_count = 0;
  double min_density = 0.0;
  Eigen::Index n_above = 0;
  bool vacuous = false;  // every unit already below the cutoff
};

/// psi = (theta1 (1 - theta2) + theta3 theta2) / theta4 where theta1 is the
/// smoothed pseudo-outcome at c among units with A >= c, theta2 = P(A < c),
/// theta3 = E(Y | A < c) (0 when no unit is below c) and theta4 = E(Y).
TruncatedEffectEstimate truncated_effect(const SpatialDataset& d, AdjustmentSet adjust,
                                         const ExposureDecomposition* dec, double c,
                                         const TruncatedEffectConfig& config = {});
TruncatedEffectEstimate truncated_effect(const AnalysisData& data, double c,
                                         const TruncatedEffectConfig& config = {});

struct DeltaMethodResult {
  double psi = 0.0;
  double se = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::array<double, 4> gradient{};
};

std::array<double, 4> psi_gradient(const std::array<double, 4>& theta);

/// `phi` is n x 4 (one influence-function vector per column). The covariance
/// uses the n - 1 denominator; se = sqrt(grad' Sigma grad / n).
DeltaMethodResult delta_method(const Matrix& phi, const std::array<double, 4>& theta);

/// Columns phi1..phi4. phi1_i = 1{A_i >= c} n w_i (xi_i - nu) with w the
/// smoother weights at c over the A >= c units (in `above` order).
Matrix influence_functions(const Vector& a, const Vector& y, double c, const Vector& xi_above,
                           double nu_hat, const Vector& weights_above,
                           const std::array<double, 4>& theta);

struct GridSpec {
  int points = 100;
  double lower_percentile = 0.025;
  double upper_percentile = 0.975;
  std::optional<std::vector<double>> values;  // explicit grid overrides the rest
};

struct ErcPoint {
  double a = 0.0;
  double nu = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double se = 0.0;
};

struct ErcCurve {
  std::vector<ErcPoint> points;
  double bandwidth = 0.0;
  std::int64_t clamped_count = 0;
};

/// Exposure-response curve from the pseudo-outcome on the full sample.
ErcCurve erc_grid(const SpatialDataset& d, AdjustmentSet adjust, const ExposureDecomposition* dec,
                  const GridSpec& grid, const TruncatedEffectConfig& config = {});
ErcCurve erc_grid(const AnalysisData& data, const GridSpec& grid,
                  const TruncatedEffectConfig& config = {});

struct Policy {
  enum class Kind { Identity, Shift, Cap } kind = Kind::Identity;
  double value = 0.0;  // delta for Shift, cutoff for Cap

  static Policy identity() { return {}; }
  static Policy shift(double delta) { return {Kind::Shift, delta}; }
  static Policy cap(double c) { return {Kind::Cap, c}; }
};

struct PolicyEffect {
  /// Shift/Identity: mean mu(z, q(a)) - mean mu(z, a). Cap: the ratio of the two means.
  double estimate = 0.0;
  std::int64_t extrapolating_units = 0;
  bool positivity_warning = false;
  double tolerance = 0.0;  // distance beyond the observed range that counts as extrapolation
};

/// Outcome-regression plug-in, no doubly robust correction.
PolicyEffect policy_effect(const AnalysisData& data, const Policy& policy,
                           const NuisanceOptions& options = {});
PolicyEffect policy_effect(const SpatialDataset& d, AdjustmentSet adjust,
                           const ExposureDecomposition* dec, const Policy& policy,
                           const NuisanceOptions& options = {});

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// max(|a1 - a2|, |b1 - b2|).
double hausdorff(const Interval& i1, const Interval& i2);
double avg_hausdorff(const std::vector<std::pair<Interval, Interval>>& pairs);

}  // namespace spatialiv

#endif
