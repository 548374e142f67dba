#ifndef SPATIALIV_CONFIG_HPP
#define SPATIALIV_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spatialiv/benchmark.hpp"
#include "spatialiv/linear_iv.hpp"

namespace spatialiv {

inline constexpr int kSchemaVersion = 1;

struct DatasetSpec {
  std::string path;
  std::string x = "x";
  std::string y = "y";
  std::string exposure = "exposure";
  std::optional<std::string> outcome = "outcome";
  std::optional<std::string> id = "id";
  std::optional<std::string> region;
  std::vector<std::string> covariates;

  CsvSchema schema() const;
};

struct BasisSpec {
  std::string kind = "tps";  // tps | laplacian | precision | region
  std::optional<int> dimension;
  std::optional<double> variance_target;
  int min_dimension = 0;  // 0: smallest valid dimension for the kind
  int max_dimension = 0;  // 0: n / 2
  std::vector<int> dimensions;  // sensitivity
  int knn_k = 6;
  std::optional<std::string> edge_list;
};

struct ErcSpec {
  int points = 100;
  double lower_percentile = 0.025;
  double upper_percentile = 0.975;
  std::optional<std::vector<double>> values;
  bool svg = true;
  std::optional<std::vector<double>> risk_ratio;  // [a_numerator, a_denominator]
};

struct BenchmarkSpec {
  std::vector<std::string> methods = BenchmarkConfig{}.methods;
  int basis_dimension = 0;
  int knn_k = 6;
  int truth_reps = 2000;
  std::optional<double> truth;
};

/// Everything a command reads. Each command uses the blocks it needs; the
/// rest keep their defaults and still appear in the resolved config.
struct RunConfig {
  int schema_version = kSchemaVersion;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string format = "csv";
  std::string output_dir = "out";
  int replicates = 100;

  SimScenario scenario = SimScenario::defaults(Mechanism::M1, OutcomeModel::Linear);
  DatasetSpec dataset;
  BasisSpec basis;

  std::string model = "truncated";  // truncated | linear
  std::string strategy = "2sls";
  std::vector<std::string> adjustments = {"ac"};
  std::vector<double> cutoffs = {0.5};
  std::optional<std::vector<double>> bandwidths;
  NuisanceOptions estimator;
  ErcSpec erc;
  BenchmarkSpec benchmark;
};

/// Strict parse: unknown keys, wrong types and bad values are ConfigError.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);
/// Fully resolved config; parse_config(resolved_json(c)) reproduces c.
std::string resolved_json(const RunConfig& c);

}  // namespace spatialiv

#endif
