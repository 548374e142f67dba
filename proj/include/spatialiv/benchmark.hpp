#ifndef SPATIALIV_BENCHMARK_HPP
#define SPATIALIV_BENCHMARK_HPP

#include <optional>
#include <string>
#include <vector>

#include "spatialiv/dr_effects.hpp"
#include "spatialiv/gpsim.hpp"
#include "spatialiv/table.hpp"

namespace spatialiv {

/// The six adjustment approaches of the simulation study, plus "oracle", a
/// dummy that reports the scenario truth and is used to check the harness.
const std::vector<std::string>& benchmark_method_names();
bool is_benchmark_method(const std::string& name);

/// Reference bias and RMSE per method and scenario, in units of 1e-2.
struct ReferenceValue {
  std::string method;
  double bias = 0.0;
  double rmse = 0.0;
};

/// Empty for methods without a reference value (e.g. the oracle).
std::optional<ReferenceValue> table2_reference(Mechanism m, OutcomeModel o, const std::string& method);

/// Tolerance band on the bias (units of 1e-2). References of magnitude >= 7
/// require the same sign and a magnitude in [7, 20]; smaller references
/// require |bias| < max(4, 2 |reference|).
struct BiasBand {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double bias_x100) const noexcept { return bias_x100 >= lo && bias_x100 <= hi; }
};
BiasBand bias_band(double reference_bias_x100);

/// Frozen truth at cutoff 0.5 (10^5 replicates) for the default scenario
/// parameters, with cross correlation 0.95 or 0. Empty when the scenario
/// differs in anything that changes the per-unit marginal law.
std::optional<TruthEstimate> frozen_truth(const SimScenario& s, double c);

struct BenchmarkConfig {
  SimScenario scenario = SimScenario::defaults(Mechanism::M1, OutcomeModel::Linear);
  int replicates = 100;
  double cutoff = 0.5;
  std::vector<std::string> methods = {"baseline",          "spatialcoord",
                                      "iv_tps",            "iv_graphlaplacian",
                                      "iv_tps_spatialcoord", "iv_graphlaplacian_spatialcoord"};
  int basis_dimension = 0;  // 0 means floor(0.07 n)
  int knn_k = 6;
  int truth_reps = 2000;    // Monte Carlo replicates when no frozen truth applies
  std::optional<double> truth;
  TruncatedEffectConfig estimator{};
  int threads = 1;
};

struct BenchmarkRow {
  std::string method;
  double cutoff = 0.0;
  int ok = 0;
  int failed = 0;
  double mean_estimate = 0.0;
  double bias_x100 = 0.0;
  double rmse_x100 = 0.0;
  double mc_se_x100 = 0.0;
  double coverage = 0.0;
  std::optional<ReferenceValue> reference;
  std::optional<BiasBand> band;
  bool pass = true;
};

struct BenchmarkReport {
  double truth = 0.0;
  double truth_se = 0.0;
  std::string truth_source;
  double jitter_uc = 0.0;
  double jitter_c = 0.0;
  std::vector<BenchmarkRow> rows;
  std::vector<ReplicationRecord> records;

  bool all_pass() const;
  const BenchmarkRow* find(const std::string& method) const;
  Table summary_table() const;
  Table replicate_table() const;
  /// Fixed-width text rendering of the summary.
  std::string text() const;
};

/// Estimator suite over a fixed layout: bases are built once from the
/// sampler's coordinates and reused by every replicate.
EstimatorSuite make_benchmark_suite(const GpSampler& sampler, const BenchmarkConfig& config,
                                    double truth);

BenchmarkReport run_benchmark(const BenchmarkConfig& config);

}  // namespace spatialiv

#endif
