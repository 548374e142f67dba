#include "spatialiv/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace spatialiv {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

CsvSchema DatasetSpec::schema() const {
  CsvSchema s;
  s.x = x;
  s.y = y;
  s.exposure = exposure;
  s.outcome = outcome;
  s.id = id;
  s.region = region;
  s.covariates = covariates;
  return s;
}

namespace {

[[noreturn]] void fail(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(path + " must be a JSON object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : j.items()) {
    if (!ok.count(item.key())) fail("unknown config key '" + path + "." + item.key() + "'");
  }
}

bool present(const json& j, const char* key) { return j.contains(key) && !j.at(key).is_null(); }

void read(const json& j, const char* key, const std::string& path, double& out) {
  if (!present(j, key)) return;
  if (!j.at(key).is_number()) fail(path + "." + key + " must be a number");
  out = j.at(key).get<double>();
  if (!std::isfinite(out)) fail(path + "." + key + " must be finite");
}

void read(const json& j, const char* key, const std::string& path, int& out) {
  if (!present(j, key)) return;
  if (!j.at(key).is_number_integer()) fail(path + "." + key + " must be an integer");
  out = j.at(key).get<int>();
}

void read(const json& j, const char* key, const std::string& path, std::uint64_t& out) {
  if (!present(j, key)) return;
  if (!j.at(key).is_number_unsigned()) fail(path + "." + key + " must be a nonnegative integer");
  out = j.at(key).get<std::uint64_t>();
}

void read(const json& j, const char* key, const std::string& path, bool& out) {
  if (!present(j, key)) return;
  if (!j.at(key).is_boolean()) fail(path + "." + key + " must be true or false");
  out = j.at(key).get<bool>();
}

void read(const json& j, const char* key, const std::string& path, std::string& out) {
  if (!present(j, key)) return;
  if (!j.at(key).is_string()) fail(path + "." + key + " must be a string");
  out = j.at(key).get<std::string>();
}

// Optional fields: an explicit null clears the default.
template <typename T>
void read_opt(const json& j, const char* key, const std::string& path, std::optional<T>& out) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null()) {
    out.reset();
    return;
  }
  T v{};
  read(j, key, path, v);
  out = v;
}

template <typename T>
void read_list(const json& j, const char* key, const std::string& path, std::vector<T>& out) {
  if (!present(j, key)) return;
  const json& arr = j.at(key);
  if (!arr.is_array()) fail(path + "." + key + " must be an array");
  std::vector<T> v;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    json wrap = json::object();
    wrap["v"] = arr[i];
    T item{};
    if (!present(wrap, "v")) fail(path + "." + key + " must not contain null");
    read(wrap, "v", path + "." + key + "[" + std::to_string(i) + "]", item);
    v.push_back(item);
  }
  out = std::move(v);
}

template <typename T>
void read_list_opt(const json& j, const char* key, const std::string& path,
                   std::optional<std::vector<T>>& out) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null()) {
    out.reset();
    return;
  }
  std::vector<T> v;
  read_list(j, key, path, v);
  out = std::move(v);
}

template <typename F>
auto convert(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    fail(e.what());
  }
}

void parse_scenario(const json& j, SimScenario& s) {
  const std::string path = "scenario";
  check_keys(j, path,
             {"mechanism", "outcome_model", "n", "theta_uc", "theta_c", "cross_corr", "mean_uc",
              "mean_c", "mean_u", "noise_sd", "coefficients", "layout_seed", "layout_width",
              "layout_height", "region_count",
              "matern_scaled_argument", "coords"});
  std::string mech = to_string(s.mechanism), outcome = to_string(s.outcome_model);
  read(j, "mechanism", path, mech);
  read(j, "outcome_model", path, outcome);
  s = SimScenario::defaults(convert([&] { return parse_mechanism(mech); }),
                            convert([&] { return parse_outcome_model(outcome); }));
  read(j, "n", path, s.n);
  read(j, "theta_uc", path, s.theta_uc);
  read(j, "theta_c", path, s.theta_c);
  read(j, "cross_corr", path, s.cross_corr);
  read(j, "mean_uc", path, s.mean_uc);
  read(j, "mean_c", path, s.mean_c);
  read(j, "mean_u", path, s.mean_u);
  read(j, "noise_sd", path, s.noise_sd);
  read(j, "layout_seed", path, s.layout_seed);
  read(j, "layout_width", path, s.layout_width);
  read(j, "layout_height", path, s.layout_height);
  read(j, "region_count", path, s.region_count);
  read(j, "matern_scaled_argument", path, s.matern_scaled_argument);
  if (present(j, "coefficients")) {
    const json& c = j.at("coefficients");
    const std::string cp = path + ".coefficients";
    check_keys(c, cp, {"intercept", "a", "u", "au", "a2", "a2u"});
    read(c, "intercept", cp, s.coefficients.intercept);
    read(c, "a", cp, s.coefficients.a);
    read(c, "u", cp, s.coefficients.u);
    read(c, "au", cp, s.coefficients.au);
    read(c, "a2", cp, s.coefficients.a2);
    read(c, "a2u", cp, s.coefficients.a2u);
  }
  if (present(j, "coords")) {
    const json& c = j.at("coords");
    const std::string cp = path + ".coords";
    check_keys(c, cp, {"kind", "path", "x", "y", "id", "region"});
    std::string kind = "synthetic";
    read(c, "kind", cp, kind);
    if (kind == "synthetic") {
      s.coords_source.kind = CoordsSource::Kind::Synthetic;
    } else if (kind == "file") {
      s.coords_source.kind = CoordsSource::Kind::FromFile;
    } else {
      fail(cp + ".kind must be 'synthetic' or 'file'");
    }
    read(c, "path", cp, s.coords_source.path);
    read(c, "x", cp, s.coords_source.x_column);
    read(c, "y", cp, s.coords_source.y_column);
    read_opt(c, "id", cp, s.coords_source.id_column);
    read_opt(c, "region", cp, s.coords_source.region_column);
    if (s.coords_source.kind == CoordsSource::Kind::FromFile && s.coords_source.path.empty()) {
      fail(cp + ".path is required for kind 'file'");
    }
  }
  convert([&] {
    s.validate();
    return 0;
  });
}

void parse_learners(const json& j, const char* key, const std::string& path, std::vector<Learner>& out) {
  std::vector<std::string> names;
  for (Learner l : out) names.push_back(to_string(l));
  read_list(j, key, path, names);
  if (names.empty()) fail(path + "." + key + " must not be empty");
  out.clear();
  for (const auto& n : names) out.push_back(convert([&] { return parse_learner(n); }));
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, "config",
             {"schema_version", "seed", "threads", "format", "output_dir", "replicates", "scenario",
              "dataset", "basis", "model", "strategy", "adjustments", "cutoffs", "bandwidths",
              "estimator", "erc", "benchmark"});
  if (!j.contains("schema_version")) fail("config.schema_version is required");
  RunConfig c;
  read(j, "schema_version", "config", c.schema_version);
  if (c.schema_version != kSchemaVersion) {
    fail("unsupported schema_version " + std::to_string(c.schema_version) + " (expected " +
         std::to_string(kSchemaVersion) + ")");
  }
  read(j, "seed", "config", c.seed);
  read(j, "threads", "config", c.threads);
  read(j, "format", "config", c.format);
  read(j, "output_dir", "config", c.output_dir);
  read(j, "replicates", "config", c.replicates);
  read(j, "model", "config", c.model);
  read(j, "strategy", "config", c.strategy);
  read_list(j, "adjustments", "config", c.adjustments);
  read_list(j, "cutoffs", "config", c.cutoffs);
  read_list_opt(j, "bandwidths", "config", c.bandwidths);

  if (c.threads < 1) fail("config.threads must be at least 1");
  if (c.format != "csv" && c.format != "json") fail("config.format must be 'csv' or 'json'");
  if (c.replicates < 1) fail("config.replicates must be at least 1");
  if (c.model != "truncated" && c.model != "linear") fail("config.model must be 'truncated' or 'linear'");
  convert([&] { return parse_iv_strategy(c.strategy); });
  if (c.adjustments.empty()) fail("config.adjustments must not be empty");
  for (const auto& a : c.adjustments) convert([&] { return parse_adjustment(a); });
  if (c.cutoffs.empty()) fail("config.cutoffs must not be empty");
  if (c.bandwidths) {
    if (c.bandwidths->empty()) fail("config.bandwidths must not be empty");
    if (!std::is_sorted(c.bandwidths->begin(), c.bandwidths->end()) || c.bandwidths->front() <= 0.0) {
      fail("config.bandwidths must be positive and ascending");
    }
  }

  if (present(j, "scenario")) parse_scenario(j.at("scenario"), c.scenario);

  if (present(j, "dataset")) {
    const json& d = j.at("dataset");
    check_keys(d, "dataset", {"path", "x", "y", "exposure", "outcome", "id", "region", "covariates"});
    read(d, "path", "dataset", c.dataset.path);
    read(d, "x", "dataset", c.dataset.x);
    read(d, "y", "dataset", c.dataset.y);
    read(d, "exposure", "dataset", c.dataset.exposure);
    read_opt(d, "outcome", "dataset", c.dataset.outcome);
    read_opt(d, "id", "dataset", c.dataset.id);
    read_opt(d, "region", "dataset", c.dataset.region);
    read_list(d, "covariates", "dataset", c.dataset.covariates);
  }

  if (present(j, "basis")) {
    const json& b = j.at("basis");
    check_keys(b, "basis", {"kind", "dimension", "variance_target", "min_dimension", "max_dimension",
                            "dimensions", "knn_k", "edge_list"});
    read(b, "kind", "basis", c.basis.kind);
    read_opt(b, "dimension", "basis", c.basis.dimension);
    read_opt(b, "variance_target", "basis", c.basis.variance_target);
    read(b, "min_dimension", "basis", c.basis.min_dimension);
    read(b, "max_dimension", "basis", c.basis.max_dimension);
    read_list(b, "dimensions", "basis", c.basis.dimensions);
    read(b, "knn_k", "basis", c.basis.knn_k);
    read_opt(b, "edge_list", "basis", c.basis.edge_list);
  }
  const auto& kind = c.basis.kind;
  if (kind != "tps" && kind != "laplacian" && kind != "precision" && kind != "region") {
    fail("basis.kind must be one of tps, laplacian, precision, region");
  }
  if (c.basis.variance_target && !(*c.basis.variance_target > 0.0 && *c.basis.variance_target < 1.0)) {
    fail("basis.variance_target must lie in (0, 1)");
  }
  if (c.basis.dimension && *c.basis.dimension < 1) fail("basis.dimension must be positive");

  if (present(j, "estimator")) {
    const json& e = j.at("estimator");
    check_keys(e, "estimator", {"folds", "outcome_learners", "density_learners", "density_variance_scale",
                                      "density_fit"});
    read(e, "folds", "estimator", c.estimator.folds);
    parse_learners(e, "outcome_learners", "estimator", c.estimator.outcome_learners);
    parse_learners(e, "density_learners", "estimator", c.estimator.density_learners);
    read(e, "density_variance_scale", "estimator", c.estimator.density_variance_scale);
    if (present(e, "density_fit")) {
      std::string f;
      read(e, "density_fit", "estimator", f);
      c.estimator.density_fit = parse_density_fit(f);
    }
  }
  if (c.estimator.folds < 2) fail("estimator.folds must be at least 2");
  if (!(c.estimator.density_variance_scale > 0.0)) fail("estimator.density_variance_scale must be positive");

  if (present(j, "erc")) {
    const json& e = j.at("erc");
    check_keys(e, "erc", {"points", "lower_percentile", "upper_percentile", "values", "svg", "risk_ratio"});
    read(e, "points", "erc", c.erc.points);
    read(e, "lower_percentile", "erc", c.erc.lower_percentile);
    read(e, "upper_percentile", "erc", c.erc.upper_percentile);
    read_list_opt(e, "values", "erc", c.erc.values);
    read(e, "svg", "erc", c.erc.svg);
    read_list_opt(e, "risk_ratio", "erc", c.erc.risk_ratio);
  }
  if (c.erc.points < 1) fail("erc.points must be at least 1");
  if (!(0.0 <= c.erc.lower_percentile && c.erc.lower_percentile < c.erc.upper_percentile &&
        c.erc.upper_percentile <= 1.0)) {
    fail("erc percentiles must satisfy 0 <= lower < upper <= 1");
  }
  if (c.erc.risk_ratio && c.erc.risk_ratio->size() != 2) fail("erc.risk_ratio must hold two exposure values");

  if (present(j, "benchmark")) {
    const json& b = j.at("benchmark");
    check_keys(b, "benchmark", {"methods", "basis_dimension", "knn_k", "truth_reps", "truth"});
    read_list(b, "methods", "benchmark", c.benchmark.methods);
    read(b, "basis_dimension", "benchmark", c.benchmark.basis_dimension);
    read(b, "knn_k", "benchmark", c.benchmark.knn_k);
    read(b, "truth_reps", "benchmark", c.benchmark.truth_reps);
    read_opt(b, "truth", "benchmark", c.benchmark.truth);
  }
  if (c.benchmark.methods.empty()) fail("benchmark.methods must not be empty");
  for (const auto& m : c.benchmark.methods) {
    if (!is_benchmark_method(m)) fail("unknown benchmark method '" + m + "'");
  }
  if (c.benchmark.basis_dimension < 0) fail("benchmark.basis_dimension must be nonnegative");
  if (c.benchmark.truth_reps < 1) fail("benchmark.truth_reps must be positive");

  c.scenario.seed = c.seed;
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

namespace {

template <typename T>
ordered_json opt(const std::optional<T>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

ordered_json learner_names(const std::vector<Learner>& ls) {
  ordered_json out = ordered_json::array();
  for (Learner l : ls) out.push_back(to_string(l));
  return out;
}

}  // namespace

std::string resolved_json(const RunConfig& c) {
  ordered_json j;
  j["schema_version"] = c.schema_version;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["format"] = c.format;
  j["output_dir"] = c.output_dir;
  j["replicates"] = c.replicates;

  const auto& s = c.scenario;
  ordered_json sc;
  sc["mechanism"] = to_string(s.mechanism);
  sc["outcome_model"] = to_string(s.outcome_model);
  sc["n"] = s.n;
  sc["theta_uc"] = s.theta_uc;
  sc["theta_c"] = s.theta_c;
  sc["cross_corr"] = s.cross_corr;
  sc["mean_uc"] = s.mean_uc;
  sc["mean_c"] = s.mean_c;
  sc["mean_u"] = s.mean_u;
  sc["noise_sd"] = s.noise_sd;
  sc["coefficients"] = ordered_json{{"intercept", s.coefficients.intercept}, {"a", s.coefficients.a},
                                    {"u", s.coefficients.u},                 {"au", s.coefficients.au},
                                    {"a2", s.coefficients.a2},               {"a2u", s.coefficients.a2u}};
  sc["layout_seed"] = s.layout_seed;
  sc["layout_width"] = s.layout_width;
  sc["layout_height"] = s.layout_height;
  sc["region_count"] = s.region_count;
  sc["matern_scaled_argument"] = s.matern_scaled_argument;
  const auto& cs = s.coords_source;
  sc["coords"] = ordered_json{{"kind", cs.kind == CoordsSource::Kind::Synthetic ? "synthetic" : "file"},
                              {"path", cs.path},
                              {"x", cs.x_column},
                              {"y", cs.y_column},
                              {"id", opt(cs.id_column)},
                              {"region", opt(cs.region_column)}};
  j["scenario"] = sc;

  const auto& d = c.dataset;
  j["dataset"] = ordered_json{{"path", d.path},         {"x", d.x},   {"y", d.y},
                              {"exposure", d.exposure}, {"outcome", opt(d.outcome)},
                              {"id", opt(d.id)},        {"region", opt(d.region)},
                              {"covariates", d.covariates}};
  const auto& b = c.basis;
  j["basis"] = ordered_json{{"kind", b.kind},
                            {"dimension", opt(b.dimension)},
                            {"variance_target", opt(b.variance_target)},
                            {"min_dimension", b.min_dimension},
                            {"max_dimension", b.max_dimension},
                            {"dimensions", b.dimensions},
                            {"knn_k", b.knn_k},
                            {"edge_list", opt(b.edge_list)}};
  j["model"] = c.model;
  j["strategy"] = c.strategy;
  j["adjustments"] = c.adjustments;
  j["cutoffs"] = c.cutoffs;
  j["bandwidths"] = opt(c.bandwidths);
  j["estimator"] = ordered_json{{"folds", c.estimator.folds},
                                {"outcome_learners", learner_names(c.estimator.outcome_learners)},
                                {"density_learners", learner_names(c.estimator.density_learners)},
                                {"density_variance_scale", c.estimator.density_variance_scale},
                                {"density_fit", to_string(c.estimator.density_fit)}};
  j["erc"] = ordered_json{{"points", c.erc.points},
                          {"lower_percentile", c.erc.lower_percentile},
                          {"upper_percentile", c.erc.upper_percentile},
                          {"values", opt(c.erc.values)},
                          {"svg", c.erc.svg},
                          {"risk_ratio", opt(c.erc.risk_ratio)}};
  j["benchmark"] = ordered_json{{"methods", c.benchmark.methods},
                                {"basis_dimension", c.benchmark.basis_dimension},
                                {"knn_k", c.benchmark.knn_k},
                                {"truth_reps", c.benchmark.truth_reps},
                                {"truth", opt(c.benchmark.truth)}};
  return j.dump(2) + "\n";
}

}  // namespace spatialiv
