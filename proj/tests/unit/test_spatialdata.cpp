#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "spatialiv/spatialdata.hpp"

using namespace spatialiv;
namespace fs = std::filesystem;

namespace {

std::string tmp_file(const std::string& name, const std::string& content) {
  fs::create_directories(SPATIALIV_TEST_TMP);
  const std::string path = std::string(SPATIALIV_TEST_TMP) + "/spatialdata_" + name;
  std::ofstream(path) << content;
  return path;
}

SpatialDataset points(std::initializer_list<std::pair<double, double>> pts) {
  SpatialDataset d;
  const auto n = static_cast<Eigen::Index>(pts.size());
  d.coords.resize(n, 2);
  Eigen::Index i = 0;
  for (auto [x, y] : pts) {
    d.coords(i, 0) = x;
    d.coords(i, 1) = y;
    d.ids.push_back("p" + std::to_string(i));
    ++i;
  }
  d.exposure = Vector::Zero(n);
  d.covariates.resize(n, 0);
  return d;
}

Eigen::Index degree_of(const SpatialGraph& g, Eigen::Index v) { return g.degree[static_cast<std::size_t>(v)]; }

}  // namespace

TEST_CASE("load_csv: minimal schema") {
  const auto path = tmp_file("min.csv", "x,y,a\n0,0,1\n1,0,2\n0,1,3\n1,1,4\n2,2,5\n");
  const auto r = load_csv(path, CsvSchema{});
  CHECK(r.dataset.n() == 5);
  CHECK(!r.dataset.outcome);
  CHECK(r.dataset.p() == 0);
  CHECK(r.dropped_rows == 0);
  CHECK(r.dataset.exposure(4) == 5.0);
}

TEST_CASE("load_csv: missing exposure row is dropped and counted") {
  const auto path = tmp_file("nan.csv", "# note: comment lines are skipped\nx,y,a\n0,0,1\n1,0,NaN\n0,1,3\n1,1,4\n2,2,\n");
  const auto r = load_csv(path, CsvSchema{});
  CHECK(r.dataset.n() == 3);
  CHECK(r.dropped_rows == 2);
}

TEST_CASE("load_csv: 14-covariate schema") {
  std::vector<std::string> covs;
  std::string header = "zip,x,y,pm25,mortality";
  for (int k = 1; k <= 14; ++k) {
    covs.push_back("cov" + std::to_string(k));
    header += ",cov" + std::to_string(k);
  }
  std::string body = header + "\n";
  for (int i = 0; i < 6; ++i) {
    body += "z" + std::to_string(i) + "," + std::to_string(i) + "," + std::to_string(i % 3) + ",8.5,0.05";
    for (int k = 1; k <= 14; ++k) body += "," + std::to_string(i * k % 7);
    body += "\n";
  }
  CsvSchema s;
  s.exposure = "pm25";
  s.outcome = "mortality";
  s.id = "zip";
  s.covariates = covs;
  const auto r = load_csv(tmp_file("s2.csv", body), s);
  CHECK(r.dataset.p() == 14);
  CHECK(r.dataset.n() == 6);
  CHECK(r.dataset.outcome);
  CHECK(r.dataset.ids[2] == "z2");
}

TEST_CASE("load_csv: error kinds") {
  auto code_of = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::ConfigError;
  };
  const auto missing_col = tmp_file("nocol.csv", "x,y,b\n0,0,1\n1,1,1\n2,2,2\n");
  CHECK(code_of([&] { load_csv(missing_col, CsvSchema{}); }) == ErrorCode::MissingColumn);
  const auto text = tmp_file("text.csv", "x,y,a\n0,0,1\n1,1,abc\n2,2,2\n");
  CHECK(code_of([&] { load_csv(text, CsvSchema{}); }) == ErrorCode::NonNumericValue);
  try {
    load_csv(text, CsvSchema{});
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  const auto empty = tmp_file("empty.csv", "x,y,a\n0,0,NA\n");
  CHECK(code_of([&] { load_csv(empty, CsvSchema{}); }) == ErrorCode::EmptyAfterFiltering);
  CHECK(code_of([&] { load_csv(std::string(SPATIALIV_TEST_TMP) + "/does_not_exist.csv", CsvSchema{}); }) ==
        ErrorCode::IoError);
}

TEST_CASE("load_csv round trip through write_csv") {
  std::mt19937_64 gen(9);
  std::normal_distribution<double> z;
  SpatialDataset d;
  const int n = 25;
  d.coords.resize(n, 2);
  d.exposure.resize(n);
  d.outcome = Vector(n);
  d.covariates.resize(n, 2);
  d.covariate_names = {"c1", "c2"};
  d.region = std::vector<std::string>();
  for (int i = 0; i < n; ++i) {
    d.coords(i, 0) = z(gen);
    d.coords(i, 1) = z(gen);
    d.exposure(i) = z(gen);
    (*d.outcome)(i) = z(gen);
    d.covariates(i, 0) = z(gen);
    d.covariates(i, 1) = z(gen);
    d.ids.push_back("id" + std::to_string(i));
    d.region->push_back(i % 2 ? "east" : "west");
  }
  const std::string path = std::string(SPATIALIV_TEST_TMP) + "/spatialdata_roundtrip.csv";
  fs::create_directories(SPATIALIV_TEST_TMP);
  write_csv(d, path, {{"origin", "unit test"}});
  const auto back = load_csv(path, default_schema_for(d)).dataset;
  CHECK(back.n() == n);
  CHECK(back.ids == d.ids);
  CHECK(*back.region == *d.region);
  CHECK((back.coords - d.coords).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.exposure - d.exposure).cwiseAbs().maxCoeff() == 0.0);
  CHECK((*back.outcome - *d.outcome).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.covariates - d.covariates).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("validate rejects bad datasets") {
  auto d = points({{0, 0}, {1, 0}, {0, 1}});
  CHECK_NOTHROW(d.validate());
  auto small = points({{0, 0}, {1, 0}});
  CHECK_THROWS_AS(small.validate(), Error);
  auto nonfinite = d;
  nonfinite.exposure(1) = std::nan("");
  CHECK_THROWS_AS(nonfinite.validate(), Error);
  auto dup = d;
  dup.ids[2] = dup.ids[0];
  CHECK_THROWS_AS(dup.validate(), Error);
}

TEST_CASE("distance_matrix examples") {
  const auto d = distance_matrix(points({{0, 0}, {3, 4}}).coords);
  CHECK(d(0, 1) == doctest::Approx(5.0));
  CHECK(d(0, 0) == 0.0);
  const auto same = distance_matrix(points({{2, 2}, {2, 2}}).coords);
  CHECK(same(0, 1) == 0.0);
  const auto sq = distance_matrix(points({{0, 0}, {1, 0}, {0, 1}, {1, 1}}).coords);
  CHECK(sq.max_abs() == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("distance_matrix property: triangle inequality") {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0, 1);
  Matrix c(40, 2);
  for (int i = 0; i < 40; ++i) c.row(i) << u(gen), u(gen);
  const auto d = distance_matrix(c);
  for (int i = 0; i < 40; ++i)
    for (int j = 0; j < 40; ++j) {
      CHECK(d(i, j) == d(j, i));
      for (int k = 0; k < 40; k += 7) CHECK(d(i, j) <= d(i, k) + d(k, j) + 1e-15);
    }
}

TEST_CASE("knn_graph examples") {
  const auto line = knn_graph(points({{0, 0}, {1, 0}, {2.5, 0}}), 1);
  CHECK(degree_of(line, 1) == 2);
  CHECK(line.edges.size() == 2);

  const auto full = knn_graph(points({{0, 0}, {1, 0}, {0, 2}, {5, 5}}), 3);
  CHECK(full.edges.size() == 6);

  const auto sq = knn_graph(points({{0, 0}, {1, 0}, {1, 1}, {0, 1}}), 2);
  for (Eigen::Index v = 0; v < 4; ++v) CHECK(degree_of(sq, v) >= 2);
  for (auto [i, j] : sq.edges) {
    // diagonals are (0, 2) and (1, 3)
    CHECK(!(i == 0 && j == 2));
    CHECK(!(i == 1 && j == 3));
  }
  CHECK(sq.connected());

  try {
    (void)knn_graph(points({{0, 0}, {1, 0}, {2, 0}}), 3);
    FAIL("expected KTooLarge");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::KTooLarge);
  }
}

TEST_CASE("knn_graph: distance ties go to the lower index") {
  // node 0 is equidistant from 1 and 2; with k = 1 it picks node 1
  const auto g = knn_graph(points({{0, 0}, {1, 0}, {-1, 0}, {-3, 0}}), 1);
  bool has01 = false, has02 = false;
  for (auto [i, j] : g.edges) {
    has01 = has01 || (i == 0 && j == 1);
    has02 = has02 || (i == 0 && j == 2);
  }
  CHECK(has01);
  // node 2's nearest is node 0, so the symmetrized graph still links them
  CHECK(has02);
}

TEST_CASE("make_graph drops self loops and duplicates, tracks components") {
  const auto g = make_graph(5, {{0, 1}, {1, 0}, {2, 2}, {3, 4}, {1, 0}});
  CHECK(g.edges.size() == 2);
  CHECK(g.component_count == 3);
  CHECK(!g.connected());
}

TEST_CASE("graph_laplacian examples") {
  const auto path = graph_laplacian(make_graph(3, {{0, 1}, {1, 2}}));
  Matrix want(3, 3);
  want << 1, -1, 0, -1, 2, -1, 0, -1, 1;
  CHECK((path.entries() - want).norm() == 0.0);

  const auto none = graph_laplacian(make_graph(3, {}));
  CHECK(none.entries().norm() == 0.0);

  const auto k3 = graph_laplacian(make_graph(3, {{0, 1}, {0, 2}, {1, 2}}));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(k3(i, j) == (i == j ? 2.0 : -1.0));
}

TEST_CASE("graph_laplacian property: zero eigenvalues count components") {
  std::mt19937_64 gen(21);
  for (int rep = 0; rep < 30; ++rep) {
    const int comps = 1 + rep % 4;
    const int per = 3 + rep % 5;
    const int n = comps * per;
    std::vector<std::pair<Eigen::Index, Eigen::Index>> edges;
    std::uniform_int_distribution<int> pick(0, per - 1);
    for (int c = 0; c < comps; ++c) {
      // spanning path plus random chords inside each planted component
      for (int i = 0; i + 1 < per; ++i) edges.emplace_back(c * per + i, c * per + i + 1);
      for (int extra = 0; extra < per; ++extra) edges.emplace_back(c * per + pick(gen), c * per + pick(gen));
    }
    const auto g = make_graph(n, edges);
    CHECK(g.component_count == comps);
    const auto l = graph_laplacian(g);
    CHECK(l.entries().rowwise().sum().cwiseAbs().maxCoeff() == 0.0);
    const auto e = sym_eigen(l);
    int zeros = 0;
    for (Eigen::Index k = 0; k < e.eigenvalues.size(); ++k) {
      CHECK(e.eigenvalues(k) >= -1e-10);
      if (std::abs(e.eigenvalues(k)) < 1e-10) ++zeros;
    }
    CHECK(zeros == comps);
    CHECK((l.entries() * Vector::Ones(n)).norm() < 1e-10);
  }
}

TEST_CASE("load_edge_list matches ids") {
  auto d = points({{0, 0}, {1, 0}, {2, 0}});
  const auto path = tmp_file("edges.csv", "from,to\np0,p1\np1,p2\n");
  const auto g = load_edge_list(path, d);
  CHECK(g.edges.size() == 2);
  CHECK(g.connected());
  const auto bad = tmp_file("edges_bad.csv", "from,to\np0,p1\np0,p9\n");
  CHECK_THROWS_AS(load_edge_list(bad, d), Error);
}
