#include "spatialiv/spatialdata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "csv_util.hpp"
#include "spatialiv/table.hpp"

namespace spatialiv {

void SpatialDataset::validate() const {
  const auto n_units = n();
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidDataset, msg); };
  if (n_units < 3) fail("need at least 3 units, got " + std::to_string(n_units));
  if (coords.rows() != n_units || coords.cols() != 2) fail("coords must be n x 2");
  if (!coords.allFinite()) fail("non-finite coordinate");
  if (!exposure.allFinite()) fail("non-finite exposure");
  if (outcome) {
    if (outcome->size() != n_units) fail("outcome length mismatch");
    if (!outcome->allFinite()) fail("non-finite outcome");
  }
  if (covariates.rows() != n_units && !(covariates.size() == 0 && covariates.cols() == 0)) {
    fail("covariate rows mismatch");
  }
  if (covariates.size() > 0 && !covariates.allFinite()) fail("non-finite covariate");
  if (static_cast<Eigen::Index>(covariate_names.size()) != covariates.cols()) {
    fail("covariate names do not match covariate columns");
  }
  if (region) {
    if (static_cast<Eigen::Index>(region->size()) != n_units) fail("region length mismatch");
    for (const auto& r : *region) {
      if (r.empty()) fail("every unit needs a region label");
    }
  }
  if (static_cast<Eigen::Index>(ids.size()) != n_units) fail("ids length mismatch");
  std::unordered_set<std::string> seen(ids.begin(), ids.end());
  if (static_cast<Eigen::Index>(seen.size()) != n_units) fail("ids must be unique");
}

LoadResult load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);

  std::string line;
  std::vector<std::string> header;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    header = detail::split_csv_line(line);
    break;
  }
  if (header.empty()) throw Error(ErrorCode::MissingColumn, path + ": no header row");
  for (auto& h : header) h = detail::trim(h);

  auto column = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw Error(ErrorCode::MissingColumn, path + ": column '" + name + "' not found");
    }
    return static_cast<std::size_t>(it - header.begin());
  };

  const std::size_t cx = column(schema.x), cy = column(schema.y), ca = column(schema.exposure);
  const std::optional<std::size_t> cid =
      schema.id ? std::optional<std::size_t>(column(*schema.id)) : std::nullopt;
  const bool has_out = schema.outcome.has_value();
  const std::size_t cout = has_out ? column(*schema.outcome) : 0;
  const std::optional<std::size_t> creg =
      schema.region ? std::optional<std::size_t>(column(*schema.region)) : std::nullopt;
  std::vector<std::size_t> ccov;
  for (const auto& name : schema.covariates) ccov.push_back(column(name));

  struct Row {
    std::string id;
    double x, y, a, out;
    std::vector<double> cov;
    std::string region;
  };
  std::vector<Row> rows;
  std::size_t dropped = 0;
  std::size_t record = 0;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    ++record;
    auto fields = detail::split_csv_line(line);
    for (auto& f : fields) f = detail::trim(f);
    if (fields.size() < header.size()) {
      ++dropped;
      continue;
    }
    bool missing = false;
    auto number = [&](std::size_t col) -> double {
      const std::string& s = fields[col];
      if (detail::is_missing_token(s)) {
        missing = true;
        return 0.0;
      }
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(s, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != s.size()) {
        throw Error(ErrorCode::NonNumericValue, path + ": line " + std::to_string(line_no) +
                                                    ", column '" + header[col] + "': '" + s + "'");
      }
      if (!std::isfinite(v)) missing = true;
      return v;
    };
    Row r;
    r.x = number(cx);
    r.y = number(cy);
    r.a = number(ca);
    if (has_out) r.out = number(cout);
    for (auto c : ccov) r.cov.push_back(number(c));
    if (creg) {
      r.region = fields[*creg];
      if (detail::is_missing_token(r.region)) missing = true;
    }
    r.id = cid ? fields[*cid] : std::to_string(record);
    if (missing) {
      ++dropped;
      continue;
    }
    rows.push_back(std::move(r));
  }

  if (rows.empty()) {
    throw Error(ErrorCode::EmptyAfterFiltering,
                path + ": no complete rows (" + std::to_string(dropped) + " dropped)");
  }

  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto p = static_cast<Eigen::Index>(ccov.size());
  SpatialDataset d;
  d.coords.resize(n, 2);
  d.exposure.resize(n);
  d.covariates.resize(n, p);
  d.covariate_names = schema.covariates;
  if (has_out) d.outcome = Vector(n);
  if (creg) d.region = std::vector<std::string>();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Row& r = rows[static_cast<std::size_t>(i)];
    d.coords(i, 0) = r.x;
    d.coords(i, 1) = r.y;
    d.exposure(i) = r.a;
    if (has_out) (*d.outcome)(i) = r.out;
    for (Eigen::Index j = 0; j < p; ++j) d.covariates(i, j) = r.cov[static_cast<std::size_t>(j)];
    if (creg) d.region->push_back(r.region);
    d.ids.push_back(r.id);
  }
  if (n < 3) {
    throw Error(ErrorCode::EmptyAfterFiltering,
                path + ": only " + std::to_string(n) + " complete rows remain");
  }
  d.validate();
  return {std::move(d), dropped};
}

CsvSchema default_schema_for(const SpatialDataset& d) {
  CsvSchema s;
  s.id = "id";
  s.x = "x";
  s.y = "y";
  s.exposure = "exposure";
  if (d.outcome) s.outcome = "outcome";
  s.covariates = d.covariate_names;
  if (d.region) s.region = "region";
  return s;
}

void write_csv(const SpatialDataset& d, const std::string& path,
               const std::vector<std::pair<std::string, std::string>>& metadata) {
  std::ostringstream out;
  for (const auto& [key, value] : metadata) out << "# " << key << ": " << value << '\n';
  out << "id,x,y,exposure";
  if (d.outcome) out << ",outcome";
  for (const auto& name : d.covariate_names) out << ',' << detail::quote_if_needed(name);
  if (d.region) out << ",region";
  out << '\n';
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    out << detail::quote_if_needed(d.ids[static_cast<std::size_t>(i)]) << ','
        << detail::format_exact(d.coords(i, 0)) << ',' << detail::format_exact(d.coords(i, 1))
        << ',' << detail::format_exact(d.exposure(i));
    if (d.outcome) out << ',' << detail::format_exact((*d.outcome)(i));
    for (Eigen::Index j = 0; j < d.p(); ++j) out << ',' << detail::format_exact(d.covariates(i, j));
    if (d.region) out << ',' << detail::quote_if_needed((*d.region)[static_cast<std::size_t>(i)]);
    out << '\n';
  }
  write_file_atomic(path, out.str());
}

SymMatrix distance_matrix(const Matrix& coords) {
  const Eigen::Index n = coords.rows();
  Matrix dist = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double dx = coords(i, 0) - coords(j, 0);
      const double dy = coords(i, 1) - coords(j, 1);
      const double r = std::hypot(dx, dy);
      dist(i, j) = r;
      dist(j, i) = r;
    }
  }
  return SymMatrix(dist);
}

SymMatrix distance_matrix(const SpatialDataset& d) { return distance_matrix(d.coords); }

SpatialGraph make_graph(Eigen::Index n, std::vector<std::pair<Eigen::Index, Eigen::Index>> edges) {
  SpatialGraph g;
  g.n = n;
  std::set<std::pair<Eigen::Index, Eigen::Index>> unique;
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || a >= n || b >= n) {
      throw Error(ErrorCode::InvalidArgument, "edge endpoint out of range");
    }
    if (a == b) continue;
    unique.emplace(std::min(a, b), std::max(a, b));
  }
  g.edges.assign(unique.begin(), unique.end());
  g.degree.assign(static_cast<std::size_t>(n), 0);
  for (auto [a, b] : g.edges) {
    ++g.degree[static_cast<std::size_t>(a)];
    ++g.degree[static_cast<std::size_t>(b)];
  }

  // union-find for components
  std::vector<Eigen::Index> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), Eigen::Index{0});
  auto find = [&](Eigen::Index x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  for (auto [a, b] : g.edges) {
    const auto ra = find(a), rb = find(b);
    if (ra != rb) parent[static_cast<std::size_t>(std::max(ra, rb))] = std::min(ra, rb);
  }
  std::map<Eigen::Index, Eigen::Index> label;
  g.component.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto r = find(i);
    auto it = label.find(r);
    if (it == label.end()) it = label.emplace(r, static_cast<Eigen::Index>(label.size())).first;
    g.component[static_cast<std::size_t>(i)] = it->second;
  }
  g.component_count = static_cast<Eigen::Index>(label.size());
  return g;
}

SpatialGraph knn_graph(const Matrix& coords, int k) {
  const Eigen::Index n = coords.rows();
  if (k < 1 || k >= n) {
    throw Error(ErrorCode::KTooLarge,
                "k = " + std::to_string(k) + " must satisfy 1 <= k < n = " + std::to_string(n));
  }
  std::vector<std::pair<Eigen::Index, Eigen::Index>> edges;
  std::vector<std::pair<double, Eigen::Index>> cand(static_cast<std::size_t>(n - 1));
  for (Eigen::Index i = 0; i < n; ++i) {
    std::size_t m = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d2 = (coords.row(i) - coords.row(j)).squaredNorm();
      cand[m++] = {d2, j};
    }
    // pair ordering breaks distance ties by lower index
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
    for (int t = 0; t < k; ++t) edges.emplace_back(i, cand[static_cast<std::size_t>(t)].second);
  }
  return make_graph(n, std::move(edges));
}

SpatialGraph knn_graph(const SpatialDataset& d, int k) { return knn_graph(d.coords, k); }

SpatialGraph load_edge_list(const std::string& path, const SpatialDataset& d) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::unordered_map<std::string, Eigen::Index> index;
  for (std::size_t i = 0; i < d.ids.size(); ++i) index.emplace(d.ids[i], static_cast<Eigen::Index>(i));

  std::vector<std::pair<Eigen::Index, Eigen::Index>> edges;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    auto fields = detail::split_csv_line(line);
    if (fields.size() < 2) {
      throw Error(ErrorCode::InvalidDataset, path + ": line " + std::to_string(line_no) +
                                                 " needs two id columns");
    }
    const std::string a = detail::trim(fields[0]), b = detail::trim(fields[1]);
    const auto ia = index.find(a), ib = index.find(b);
    if (ia == index.end() || ib == index.end()) {
      if (first) {  // header row
        first = false;
        continue;
      }
      throw Error(ErrorCode::InvalidDataset,
                  path + ": line " + std::to_string(line_no) + " references unknown id");
    }
    first = false;
    edges.emplace_back(ia->second, ib->second);
  }
  return make_graph(d.n(), std::move(edges));
}

SymMatrix graph_laplacian(const SpatialGraph& g) {
  Matrix lap = Matrix::Zero(g.n, g.n);
  for (auto [a, b] : g.edges) {
    lap(a, b) = -1.0;
    lap(b, a) = -1.0;
  }
  for (Eigen::Index i = 0; i < g.n; ++i) lap(i, i) = static_cast<double>(g.degree[static_cast<std::size_t>(i)]);
  return SymMatrix(lap);
}

}  // namespace spatialiv
