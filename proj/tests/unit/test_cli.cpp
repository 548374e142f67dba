#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "spatialiv/commands.hpp"

using namespace spatialiv;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(SPATIALIV_TEST_TMP) / "cli" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void put(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + SPATIALIV_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// data rows of a CSV table (metadata and header skipped)
std::vector<std::vector<std::string>> csv_rows(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::vector<std::vector<std::string>> rows;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::string csv_meta(const fs::path& p, const std::string& key) {
  std::ifstream in(p);
  std::string line;
  const std::string prefix = "# " + key + ": ";
  while (std::getline(in, line)) {
    if (line.rfind(prefix, 0) == 0) return line.substr(prefix.size());
  }
  return "";
}

// county-like table: exposure around 8, a smooth spatial trend and two covariates
fs::path county_csv(const fs::path& dir, int n = 300) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z;
  std::ostringstream out;
  out << "id,x,y,pm25,deaths,poverty,smoke\n";
  for (int i = 0; i < n; ++i) {
    const double x = u(rng), y = u(rng), pov = z(rng), smoke = z(rng);
    const double a = 8.0 + 2.0 * std::sin(3.0 * x) + 1.5 * y + 0.3 * pov + 1.2 * z(rng);
    const double deaths = 50.0 + 1.5 * a + 3.0 * std::cos(2.0 * y) + 2.0 * pov + smoke + 2.0 * z(rng);
    out << "c" << i << ',' << x << ',' << y << ',' << a << ',' << deaths << ',' << pov << ',' << smoke << '\n';
  }
  put(dir / "county.csv", out.str());
  return dir / "county.csv";
}

std::string county_config(const fs::path& csv, const std::string& extra) {
  return R"({"schema_version": 1, "dataset": {"path": ")" + csv.string() +
         R"(", "exposure": "pm25", "outcome": "deaths", "covariates": ["poverty", "smoke"]})" + extra + "}";
}

RunConfig config_from(const std::string& text, const fs::path& out) {
  RunConfig c = parse_config(text);
  c.output_dir = out.string();
  return c;
}

}  // namespace

TEST_CASE("config parsing is strict") {
  CHECK_NOTHROW(parse_config(R"({"schema_version": 1})"));
  for (const char* bad : {
           R"({})",
           R"({"schema_version": 2})",
           R"({"schema_version": 1, "sede": 3})",
           R"({"schema_version": 1, "scenario": {"theta": 0.2}})",
           R"({"schema_version": 1, "threads": "four"})",
           R"({"schema_version": 1, "basis": {"kind": "wavelet"}})",
           R"({"schema_version": 1, "basis": {"variance_target": 1.5}})",
           R"({"schema_version": 1, "bandwidths": [0.5, 0.1]})",
           R"({"schema_version": 1, "estimator": {"density_fit": "other"}})",
           R"({"schema_version": 1, "benchmark": {"methods": ["magic"]}})",
           R"({"schema_version": 1, "adjustments": ["everything"]})",
           R"({"schema_version": 1,)",
       }) {
    CAPTURE(bad);
    try {
      parse_config(bad);
      FAIL("accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ConfigError);
    }
  }
}

TEST_CASE("resolved config round trips") {
  RunConfig c = parse_config(R"({"schema_version": 1, "seed": 9, "cutoffs": [6, 7.5],
      "scenario": {"mechanism": "M3", "outcome_model": "nonlinear", "n": 120, "cross_corr": 0.0},
      "basis": {"kind": "laplacian", "variance_target": 0.2, "dimensions": [3, 4]},
      "estimator": {"outcome_learners": ["mean"], "density_fit": "full_truncated"},
      "erc": {"values": [1, 2], "risk_ratio": [2, 1]},
      "benchmark": {"methods": ["baseline", "oracle"], "truth": 1.25}})");
  CHECK(c.estimator.density_fit == DensityFit::FullTruncated);
  CHECK(c.scenario.seed == 9);
  const std::string once = resolved_json(c);
  const std::string twice = resolved_json(parse_config(once));
  CHECK(once == twice);
  CHECK(once.find("\"density_fit\": \"full_truncated\"") != std::string::npos);
  // defaults round trip too
  const std::string def = resolved_json(RunConfig{});
  CHECK(resolved_json(parse_config(def)) == def);
}

TEST_CASE("exit codes") {
  const fs::path dir = scratch("exit");
  put(dir / "unknown_key.json", R"({"schema_version": 1, "colour": "red"})");
  put(dir / "missing_data.json", R"({"schema_version": 1, "dataset": {"path": ")" +
                                     (dir / "nope.csv").string() + "\"}}");
  put(dir / "no_path.json", R"({"schema_version": 1})");
  CHECK(run_cli("simulate --config " + (dir / "unknown_key.json").string()) == 2);
  CHECK(run_cli("decompose --config " + (dir / "missing_data.json").string() + " --out " + (dir / "o").string()) == 3);
  CHECK(run_cli("decompose --config " + (dir / "no_path.json").string() + " --out " + (dir / "o").string()) == 2);
  CHECK(run_cli("transmogrify") == 2);
  CHECK(run_cli("simulate --threads 0") == 2);

  // malformed data row
  put(dir / "bad.csv", "id,x,y,exposure,outcome\na,0,0,1,2\nb,0,1,oops,2\n");
  put(dir / "bad.json", R"({"schema_version": 1, "dataset": {"path": ")" + (dir / "bad.csv").string() + "\"}}");
  CHECK(run_cli("decompose --config " + (dir / "bad.json").string() + " --out " + (dir / "o").string()) == 3);

  put(dir / "small.json", R"({"schema_version": 1, "replicates": 2, "scenario": {"n": 60}})");
  CHECK(run_cli("simulate --config " + (dir / "small.json").string() + " --out " + (dir / "sim").string()) == 0);
}

TEST_CASE("simulate: files, manifest, determinism, default size") {
  const fs::path a = scratch("sim_a"), b = scratch("sim_b");
  const std::string cfg = R"({"schema_version": 1, "replicates": 2, "seed": 40, "scenario": {"n": 80}})";
  std::ostringstream log;
  const auto r1 = cmd_simulate(config_from(cfg, a), log);
  CHECK(r1.exit_code == 0);
  CHECK(fs::exists(a / "dataset_0001.csv"));
  CHECK(fs::exists(a / "dataset_0002.csv"));
  CHECK(!fs::exists(a / "dataset_0003.csv"));
  CHECK(fs::exists(a / "resolved_config.json"));
  const auto manifest = csv_rows(a / "manifest.csv");
  REQUIRE(manifest.size() == 2);
  CHECK(manifest[0][1] == "40");
  CHECK(manifest[1][1] == "41");
  CHECK(manifest[1][2] == "dataset_0002.csv");
  CHECK(csv_meta(a / "dataset_0001.csv", "resolved_config") == "resolved_config.json");
  CHECK(csv_rows(a / "dataset_0001.csv").size() == 80);

  cmd_simulate(config_from(cfg, b), log);
  for (const char* f : {"dataset_0001.csv", "dataset_0002.csv", "truth_0001.csv", "manifest.csv", "truth_effect.csv"}) {
    CAPTURE(f);
    CHECK(slurp(a / f) == slurp(b / f));
  }

  // feeding the emitted resolved config back reproduces the outputs
  const fs::path c = scratch("sim_c");
  CHECK(run_cli("simulate --config " + (a / "resolved_config.json").string() + " --out " + c.string()) == 0);
  CHECK(slurp(a / "dataset_0002.csv") == slurp(c / "dataset_0002.csv"));
  CHECK(slurp(a / "truth_effect.csv") == slurp(c / "truth_effect.csv"));

  CHECK(RunConfig{}.scenario.n == 503);
  const fs::path d = scratch("sim_default");
  cmd_simulate(config_from(R"({"schema_version": 1, "replicates": 1})", d), log);
  CHECK(csv_meta(d / "manifest.csv", "n") == "503");
  CHECK(csv_rows(d / "dataset_0001.csv").size() == 503);
}

TEST_CASE("decompose hits a variance target") {
  const fs::path dir = scratch("decompose");
  const auto csv = county_csv(dir);
  std::ostringstream log;
  const RunConfig c =
      config_from(county_config(csv, R"(, "basis": {"kind": "tps", "variance_target": 0.2})"), dir / "out");
  CHECK(cmd_decompose(c, log).exit_code == 0);
  const fs::path table = dir / "out" / "decomposition.csv";
  const double share = std::stod(csv_meta(table, "confounded_share"));
  CHECK(share >= 0.18);
  CHECK(share <= 0.22);
  CHECK(!csv_meta(table, "dimension").empty());
  CHECK(csv_rows(table).size() == 300);
}

TEST_CASE("estimate: one row per cutoff and method") {
  const fs::path dir = scratch("estimate");
  const auto csv = county_csv(dir);
  std::ostringstream log;
  const RunConfig c = config_from(
      county_config(csv, R"(, "cutoffs": [6, 7, 8, 9, 10, 11, 12], "adjustments": ["ac", "coords"],
                     "basis": {"kind": "tps", "dimension": 12})"),
      dir / "out");
  CHECK(cmd_estimate(c, log).exit_code == 0);
  const auto rows = csv_rows(dir / "out" / "estimates.csv");
  CHECK(rows.size() == 14);
  int ac = 0;
  for (const auto& r : rows) ac += r[1] == "ac";
  CHECK(ac == 7);

  // json output carries the same rows
  RunConfig j = c;
  j.format = "json";
  j.output_dir = (dir / "json").string();
  cmd_estimate(j, log);
  const auto doc = nlohmann::json::parse(slurp(dir / "json" / "estimates.json"));
  CHECK(doc["rows"].size() == 14);
  CHECK(doc["metadata"]["resolved_config"] == "resolved_config.json");

  RunConfig lin = c;
  lin.model = "linear";
  lin.output_dir = (dir / "linear").string();
  cmd_estimate(lin, log);
  CHECK(csv_rows(dir / "linear" / "linear_iv.csv").size() == 1);
}

TEST_CASE("erc: default grid has 100 points") {
  const fs::path dir = scratch("erc");
  const auto csv = county_csv(dir, 200);
  std::ostringstream log;
  const RunConfig c = config_from(county_config(csv, R"(, "adjustments": ["coords"], "erc": {"risk_ratio": [10, 8]})"),
                                  dir / "out");
  CHECK(cmd_erc(c, log).exit_code == 0);
  CHECK(csv_rows(dir / "out" / "erc.csv").size() == 100);
  CHECK(fs::exists(dir / "out" / "erc.svg"));
  CHECK(csv_rows(dir / "out" / "risk_ratio.csv").size() == 1);
}

TEST_CASE("sensitivity: rows per dimension, low Laplacian dimensions rejected") {
  const fs::path dir = scratch("sensitivity");
  const auto csv = county_csv(dir, 200);
  std::ostringstream log;
  const RunConfig tps =
      config_from(county_config(csv, R"(, "basis": {"kind": "tps", "dimensions": [4, 5, 6, 7, 8]})"), dir / "tps");
  CHECK(cmd_sensitivity(tps, log).exit_code == 0);
  CHECK(csv_rows(dir / "tps" / "sensitivity.csv").size() == 5);
  CHECK(fs::exists(dir / "tps" / "sensitivity.svg"));

  const RunConfig one =
      config_from(county_config(csv, R"(, "basis": {"kind": "tps", "dimensions": [6]})"), dir / "one");
  cmd_sensitivity(one, log);
  CHECK(csv_rows(dir / "one" / "sensitivity.csv").size() == 1);

  // two separated clusters joined only within themselves: two zero eigenvalues
  std::ostringstream edges;
  edges << "from,to\n";
  for (int i = 0; i < 199; ++i) {
    if (i == 99) continue;
    edges << 'c' << i << ",c" << i + 1 << '\n';
  }
  put(dir / "edges.csv", edges.str());
  const RunConfig lap = config_from(
      county_config(csv, R"(, "basis": {"kind": "laplacian", "dimensions": [2, 3, 4], "edge_list": ")" +
                             (dir / "edges.csv").string() + "\"}"),
      dir / "lap");
  try {
    cmd_sensitivity(lap, log);
    FAIL("low dimension accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
    CHECK(std::string(e.what()).find("zero Laplacian eigenvalues") != std::string::npos);
  }
  RunConfig ok = lap;
  ok.basis.dimensions = {3, 4};
  ok.output_dir = (dir / "lap_ok").string();
  CHECK(cmd_sensitivity(ok, log).exit_code == 0);
  CHECK(csv_rows(dir / "lap_ok" / "sensitivity.csv").size() == 2);
}

TEST_CASE("benchmark report: rmse bounds bias, oracle is exact, bands") {
  BenchmarkConfig b;
  b.scenario = SimScenario::defaults(Mechanism::M1, OutcomeModel::Linear);
  b.scenario.n = 120;
  b.replicates = 4;
  b.methods = {"baseline", "spatialcoord", "oracle"};
  b.truth = 1.1;
  const auto report = run_benchmark(b);
  REQUIRE(report.rows.size() == 3);
  for (const auto& r : report.rows) {
    CAPTURE(r.method);
    CHECK(r.rmse_x100 >= std::abs(r.bias_x100) - 1e-12);
  }
  const auto* oracle = report.find("oracle");
  REQUIRE(oracle);
  CHECK(oracle->bias_x100 == 0.0);
  CHECK(oracle->rmse_x100 == 0.0);
  CHECK(!oracle->reference);

  const auto ref = table2_reference(Mechanism::M1, OutcomeModel::Linear, "baseline");
  REQUIRE(ref);
  CHECK(ref->bias == -13.21);
  CHECK(ref->rmse == 21.38);
  CHECK(table2_reference(Mechanism::M1, OutcomeModel::Linear, "iv_tps")->bias == 1.05);

  const auto wide = bias_band(-13.21);
  CHECK(wide.contains(-7.0));
  CHECK(wide.contains(-20.0));
  CHECK(!wide.contains(-6.9));
  CHECK(!wide.contains(7.5));
  const auto narrow = bias_band(1.05);
  CHECK(narrow.contains(3.99));
  CHECK(narrow.contains(-3.99));
  CHECK(!narrow.contains(4.0));
  CHECK(bias_band(3.0).contains(5.9));
  CHECK(!bias_band(3.0).contains(6.0));
}

TEST_CASE("benchmark command writes tables and maps band failures to exit code 4") {
  const fs::path dir = scratch("benchmark");
  std::ostringstream log;
  // the truth is set far off so the baseline band cannot hold
  const RunConfig c = config_from(R"({"schema_version": 1, "replicates": 2, "scenario": {"n": 100},
      "benchmark": {"methods": ["baseline", "oracle"], "truth": 5.0}})",
                                  dir);
  const auto r = cmd_benchmark(c, log);
  CHECK(r.exit_code == 4);
  CHECK(csv_rows(dir / "benchmark_summary.csv").size() == 2);
  CHECK(csv_rows(dir / "benchmark_replicates.csv").size() == 4);
  CHECK(fs::exists(dir / "benchmark.txt"));

  RunConfig two = c;
  two.cutoffs = {0.5, 0.6};
  CHECK_THROWS_AS(cmd_benchmark(two, log), Error);
}
