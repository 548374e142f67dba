#include "spatialiv/basis.hpp"

#include <cmath>
#include <limits>
#include <unordered_map>

#include "spatialiv/gpsim.hpp"

namespace spatialiv {

std::string to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::ThinPlateSpline: return "tps";
    case BasisKind::LaplacianEigen: return "laplacian";
    case BasisKind::PrecisionEigen: return "precision";
    case BasisKind::RegionIndicator: return "region";
  }
  return "unknown";
}

bool spans_constant(const Matrix& b) {
  const Vector ones = Vector::Ones(b.rows());
  const auto fit = least_squares(b, ones);
  return fit.residuals.norm() < 1e-8 * std::sqrt(static_cast<double>(b.rows()));
}

namespace {

void check_columns(const Matrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const double norm = m.col(j).norm();
    if (!std::isfinite(norm) || norm <= 0.0) {
      throw Error(ErrorCode::DegenerateCoordinates,
                  "basis column " + std::to_string(j) + " has zero or non-finite norm");
    }
  }
}

double tps_radial(double r) { return r > 0.0 ? r * r * std::log(r) : 0.0; }

}  // namespace

std::vector<Eigen::Index> maximin_knots(const Matrix& coords, Eigen::Index count) {
  const Eigen::Index n = coords.rows();
  std::vector<Eigen::Index> knots;
  if (count <= 0) return knots;
  const Eigen::RowVector2d centroid = coords.colwise().mean();
  Eigen::Index first = 0;
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = (coords.row(i) - centroid).squaredNorm();
    if (d < best) {
      best = d;
      first = i;
    }
  }
  knots.push_back(first);
  Vector nearest(n);
  for (Eigen::Index i = 0; i < n; ++i) nearest(i) = (coords.row(i) - coords.row(first)).squaredNorm();
  while (static_cast<Eigen::Index>(knots.size()) < count) {
    Eigen::Index next = 0;
    double far = -1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (nearest(i) > far) {
        far = nearest(i);
        next = i;
      }
    }
    knots.push_back(next);
    for (Eigen::Index i = 0; i < n; ++i) {
      nearest(i) = std::min(nearest(i), (coords.row(i) - coords.row(next)).squaredNorm());
    }
  }
  return knots;
}

SpatialBasis tps_basis(const Matrix& coords, int df) {
  const Eigen::Index n = coords.rows();
  if (df < 4 || df > n) {
    throw Error(ErrorCode::DfOutOfRange,
                "thin plate spline df = " + std::to_string(df) + " outside [4, n = " +
                    std::to_string(n) + "]");
  }
  const Eigen::RowVector2d first = coords.row(0);
  if (((coords.rowwise() - first).rowwise().squaredNorm().array() == 0.0).all()) {
    throw Error(ErrorCode::DegenerateCoordinates, "all coordinates are identical");
  }
  SpatialBasis b;
  b.kind = BasisKind::ThinPlateSpline;
  b.knot_indices = maximin_knots(coords, df - 3);
  b.matrix.resize(n, df);
  b.matrix.col(0).setOnes();
  b.matrix.col(1) = coords.col(0);
  b.matrix.col(2) = coords.col(1);
  for (std::size_t k = 0; k < b.knot_indices.size(); ++k) {
    const Eigen::RowVector2d knot = coords.row(b.knot_indices[k]);
    for (Eigen::Index i = 0; i < n; ++i) {
      b.matrix(i, static_cast<Eigen::Index>(3 + k)) = tps_radial((coords.row(i) - knot).norm());
    }
  }
  check_columns(b.matrix);
  b.includes_constant = true;
  return b;
}

SpatialBasis tps_basis(const SpatialDataset& d, int df) { return tps_basis(d.coords, df); }

SpatialBasis eigen_basis(const EigenDecomposition& eig, int m, EigenOrder which, BasisKind kind) {
  const auto n = eig.eigenvalues.size();
  if (m < 1 || m > n) {
    throw Error(ErrorCode::MOutOfRange,
                "basis dimension " + std::to_string(m) + " outside [1, " + std::to_string(n) + "]");
  }
  if (kind != BasisKind::LaplacianEigen && kind != BasisKind::PrecisionEigen) {
    throw Error(ErrorCode::InvalidArgument, "eigen_basis kind must be an eigen kind");
  }
  SpatialBasis b;
  b.kind = kind;
  b.matrix.resize(n, m);
  for (int j = 0; j < m; ++j) {
    // roughest: the m largest eigenvalues, still reported in ascending order
    const Eigen::Index src = which == EigenOrder::Smoothest ? j : n - m + j;
    b.matrix.col(j) = eig.eigenvectors.col(src);
    b.eigenvalues.push_back(eig.eigenvalues(src));
  }
  b.includes_constant = spans_constant(b.matrix);
  return b;
}

SpatialBasis eigen_basis(const SymMatrix& l, int m, EigenOrder which, BasisKind kind) {
  if (m < 1 || m > l.n()) {
    throw Error(ErrorCode::MOutOfRange,
                "basis dimension " + std::to_string(m) + " outside [1, " + std::to_string(l.n()) + "]");
  }
  return eigen_basis(sym_eigen(l), m, which, kind);
}

SpatialBasis region_basis(const SpatialDataset& d) {
  if (!d.region || d.region->empty()) {
    throw Error(ErrorCode::NoRegionLabels, "dataset has no region labels");
  }
  SpatialBasis b;
  b.kind = BasisKind::RegionIndicator;
  std::unordered_map<std::string, Eigen::Index> level_index;
  for (const auto& r : *d.region) {
    if (level_index.emplace(r, static_cast<Eigen::Index>(b.levels.size())).second) b.levels.push_back(r);
  }
  b.matrix = Matrix::Zero(d.n(), static_cast<Eigen::Index>(b.levels.size()));
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    b.matrix(i, level_index.at((*d.region)[static_cast<std::size_t>(i)])) = 1.0;
  }
  b.includes_constant = true;
  return b;
}

double ExposureDecomposition::confounded_share() const {
  const double total = stats::variance(a_c + a_uc);
  return total > 0.0 ? stats::variance(a_c) / total : 0.0;
}

double ExposureDecomposition::instrument_share() const {
  const double total = stats::variance(a_c + a_uc);
  return total > 0.0 ? stats::variance(a_uc) / total : 0.0;
}

ExposureDecomposition decompose(const Vector& a, std::shared_ptr<const SpatialBasis> b) {
  if (!b) throw Error(ErrorCode::InvalidArgument, "decompose needs a basis");
  if (b->matrix.rows() != a.size()) {
    throw Error(ErrorCode::DimensionMismatch, "exposure has " + std::to_string(a.size()) +
                                                  " entries, basis has " +
                                                  std::to_string(b->matrix.rows()) + " rows");
  }
  const auto fit = least_squares(b->matrix, a);
  ExposureDecomposition dec;
  dec.a_c = fit.fitted;
  dec.a_uc = fit.residuals;
  dec.projection_rank = fit.rank;
  dec.basis = std::move(b);
  const double va = stats::variance(a);
  dec.zero_instrument = !(stats::variance(dec.a_uc) >= 1e-12 * va) || va == 0.0;
  return dec;
}

ExposureDecomposition decompose(const Vector& a, const SpatialBasis& b) {
  return decompose(a, std::make_shared<const SpatialBasis>(b));
}

DimensionChoice choose_dimension(const Vector& a, const std::function<SpatialBasis(int)>& make,
                                 int min_dim, int max_dim, double target) {
  if (min_dim > max_dim) throw Error(ErrorCode::InvalidArgument, "empty dimension range");
  DimensionChoice prev{0, -1.0};
  for (int dim = min_dim; dim <= max_dim; ++dim) {
    const double share = decompose(a, make(dim)).confounded_share();
    if (share >= target) {
      if (prev.dimension > 0 && target - prev.confounded_share < share - target) return prev;
      return {dim, share};
    }
    prev = {dim, share};
  }
  return prev;
}

ExposureDecomposition kriging_decompose(const Vector& a, const Matrix& coords, double theta,
                                        double nugget_ratio) {
  if (coords.rows() != a.size()) throw Error(ErrorCode::DimensionMismatch, "kriging input sizes");
  if (!(nugget_ratio > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "kriging needs a positive nugget ratio");
  }
  const Matrix corr = matern_matrix(coords, theta);
  Matrix sys = corr;
  sys.diagonal().array() += nugget_ratio;
  const double mu = a.mean();
  const Vector centered = a.array() - mu;
  const Vector weights = Eigen::LLT<Matrix>(sys).solve(centered);
  ExposureDecomposition dec;
  dec.a_c = (corr * weights).array() + mu;
  dec.a_uc = a - dec.a_c;
  dec.projection_rank = a.size();
  const double va = stats::variance(a);
  dec.zero_instrument = !(stats::variance(dec.a_uc) >= 1e-12 * va) || va == 0.0;
  return dec;
}

}  // namespace spatialiv
