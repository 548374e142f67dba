#ifndef SPATIALIV_GPSIM_HPP
#define SPATIALIV_GPSIM_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "spatialiv/spatialdata.hpp"

namespace spatialiv {

/// Matern correlation with smoothness 2:
///   rho(d) = (2^{1-nu} / Gamma(nu)) (d/theta)^nu K_nu(d/theta) = (d/theta)^2 K_2(d/theta) / 2.
/// With `scaled_argument` the argument becomes sqrt(2 nu) d / theta = 2 d / theta.
double matern_corr(double dist, double theta, bool scaled_argument = false);

/// Pairwise Matern correlations. When `region_ids` is given, pairs in different
/// regions get correlation 0.
Matrix matern_matrix(const Matrix& coords, double theta, bool scaled_argument = false,
                     const std::vector<int>* region_ids = nullptr);

enum class Mechanism { M1, M2, M3 };
enum class OutcomeModel { Linear, NonLinear };

std::string to_string(Mechanism m);
std::string to_string(OutcomeModel m);
Mechanism parse_mechanism(const std::string& s);
OutcomeModel parse_outcome_model(const std::string& s);

/// Y = b0 + b_a A + b_u U + b_au A U + b_a2 A^2 + b_a2u A^2 U + noise.
struct OutcomeCoefficients {
  double intercept = -0.5;
  double a = 1.0;
  double u = -1.0;
  double au = -0.5;
  double a2 = 0.0;
  double a2u = 0.0;

  static OutcomeCoefficients for_model(OutcomeModel m);
  double mean(double exposure, double confounder) const noexcept {
    return intercept + a * exposure + u * confounder + au * exposure * confounder +
           a2 * exposure * exposure + a2u * exposure * exposure * confounder;
  }
};

struct CoordsSource {
  enum class Kind { Synthetic, FromFile } kind = Kind::Synthetic;
  std::string path;  // FromFile: CSV with x, y and optional id / region columns
  std::string x_column = "x";
  std::string y_column = "y";
  std::optional<std::string> id_column;
  std::optional<std::string> region_column;
};

/// Complete description of one data-generating process.
struct SimScenario {
  Mechanism mechanism = Mechanism::M1;
  double theta_uc = 0.01;
  double theta_c = 0.5;
  double cross_corr = 0.95;
  double mean_uc = 0.1;
  double mean_c = -0.2;
  double mean_u = 0.3;
  OutcomeModel outcome_model = OutcomeModel::Linear;
  OutcomeCoefficients coefficients{};
  double noise_sd = 1.0;
  int n = 503;
  std::uint64_t seed = 1;
  CoordsSource coords_source{};
  std::uint64_t layout_seed = 2010;
  double layout_width = 1.9;   // extent of EPA Region 6 in 1e6 m
  double layout_height = 1.2;
  int region_count = 5;
  bool matern_scaled_argument = false;

  /// Defaults for the three confounding mechanisms: theta_uc = 0.01 (M1, M3)
  /// or 0.05 (M2), theta_c = 0.5, cross correlation 0.95, means (0.1, -0.2, 0.3).
  static SimScenario defaults(Mechanism m, OutcomeModel o);
  void validate() const;
};

/// Unit locations (and regions, for M3) shared by every replicate of a scenario.
struct SimLayout {
  Matrix coords;
  std::vector<std::string> ids;
  std::vector<std::string> region;  // empty when not used
  std::vector<int> region_ids;      // dense ids aligned with `region`
};

/// Halton points (bases 2 and 3) on [0, width] x [0, height] with a seeded
/// Cranley-Patterson rotation, plus a seeded Voronoi partition into regions.
SimLayout synthetic_layout(int n, std::uint64_t layout_seed, int region_count, double width = 1.9,
                           double height = 1.2);
SimLayout make_layout(const SimScenario& s);

/// 3n x 3n covariance of (A_UC, A_C, U).
SymMatrix joint_covariance(const SimLayout& layout, const SimScenario& s);
SymMatrix joint_covariance(const Matrix& coords, const SimScenario& s,
                           const std::vector<int>* region_ids = nullptr);

struct SimTruth {
  Vector a_uc;
  Vector a_c;
  Vector u;
};

struct SimDraw {
  SpatialDataset dataset;
  SimTruth truth;
  std::optional<double> true_truncated_effect;
  std::optional<double> true_truncated_effect_se;
};

/// Factorizes the Matern blocks once per layout; draws are then cheap.
/// The (A_C, U) block is kron([[1, r], [r, 1]], R_c), so its factor is
/// kron(chol2x2, chol(R_c)); jitter is applied to each Matern block.
class GpSampler {
 public:
  GpSampler(SimLayout layout, SimScenario scenario);

  /// Deterministic in `seed`.
  SimDraw draw(std::uint64_t seed) const;
  /// Fields only, drawn from an explicit stream.
  SimTruth draw_fields(std::uint64_t seed, std::uint64_t stream) const;

  const SimLayout& layout() const noexcept { return layout_; }
  const SimScenario& scenario() const noexcept { return scenario_; }
  double jitter_uc() const noexcept { return jitter_uc_; }
  double jitter_c() const noexcept { return jitter_c_; }
  /// L L^T, i.e. the covariance the sampler actually draws from.
  SymMatrix implied_covariance() const;

 private:
  SimLayout layout_;
  SimScenario scenario_;
  Matrix lower_uc_;
  Matrix lower_c_;
  double jitter_uc_ = 0.0;
  double jitter_c_ = 0.0;
};

SimDraw sample_draw(const SimScenario& scenario);

struct TruthEstimate {
  double value = 0.0;
  double se = 0.0;
  int reps = 0;
};

/// Monte Carlo E(Y(min(A, c))) / E(Y), using the outcome mean at the capped
/// exposure with U held at its drawn value. Fields are drawn on stream 1 so they
/// never coincide with replicate data.
TruthEstimate true_truncated_effect(const GpSampler& sampler, double c, int reps);
TruthEstimate true_truncated_effect(const SimScenario& scenario, double c, int reps);

struct ReplicateRow {
  std::string method;
  double cutoff = 0.0;
  double estimate = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double se = 0.0;
  double bandwidth = 0.0;
  std::int64_t clamped_count = 0;
  double min_density = 0.0;
  std::string status = "ok";
};

/// Estimator suite: maps one simulated dataset to rows for every method.
using EstimatorSuite = std::function<std::vector<ReplicateRow>(const SimDraw&)>;

struct ReplicationRecord {
  int replicate = 0;
  std::uint64_t seed = 0;
  ReplicateRow row;
};

/// Replicate r uses seed scenario.seed + r. Failures of the suite become rows
/// with status "error: ..." for every method in `method_names`.
std::vector<ReplicationRecord> run_replications(const GpSampler& sampler, int replicates,
                                                const EstimatorSuite& suite,
                                                const std::vector<std::string>& method_names,
                                                int threads = 1);

struct MethodSummary {
  std::string method;
  double cutoff = 0.0;
  int ok = 0;
  int failed = 0;
  double mean_estimate = 0.0;
  double bias = 0.0;
  double rmse = 0.0;
  double mc_se = 0.0;  // Monte Carlo standard error of the bias
  double coverage = 0.0;
};

std::vector<MethodSummary> summarize(const std::vector<ReplicationRecord>& records, double truth);

}  // namespace spatialiv

#endif
