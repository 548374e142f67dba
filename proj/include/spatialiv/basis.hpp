#ifndef SPATIALIV_BASIS_HPP
#define SPATIALIV_BASIS_HPP

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "spatialiv/spatialdata.hpp"

namespace spatialiv {

enum class BasisKind { ThinPlateSpline, LaplacianEigen, PrecisionEigen, RegionIndicator };

std::string to_string(BasisKind kind);

enum class EigenOrder { Smoothest, Roughest };

/// n x m matrix of spatial basis columns plus how it was built.
struct SpatialBasis {
  BasisKind kind = BasisKind::ThinPlateSpline;
  Matrix matrix;
  std::vector<double> eigenvalues;          // eigen kinds
  std::vector<Eigen::Index> knot_indices;   // thin plate spline
  std::vector<std::string> levels;          // region indicators
  bool includes_constant = false;

  Eigen::Index dimension() const noexcept { return matrix.cols(); }
};

/// True when the constant vector lies in col(b) (projection residual < 1e-8).
bool spans_constant(const Matrix& b);

/// Deterministic maximin knot choice: start from the point nearest the
/// centroid, then repeatedly add the point farthest from the chosen set.
std::vector<Eigen::Index> maximin_knots(const Matrix& coords, Eigen::Index count);

/// Unpenalized thin plate spline regression basis with `df` columns:
/// [1, x, y, r^2 log r to df - 3 knots].
SpatialBasis tps_basis(const SpatialDataset& d, int df);
SpatialBasis tps_basis(const Matrix& coords, int df);

/// Eigenvectors of a Laplacian or precision matrix, ordered smooth to rough.
SpatialBasis eigen_basis(const SymMatrix& l, int m, EigenOrder which,
                         BasisKind kind = BasisKind::LaplacianEigen);
/// Same, reusing a precomputed decomposition of the matrix.
SpatialBasis eigen_basis(const EigenDecomposition& eig, int m, EigenOrder which,
                         BasisKind kind = BasisKind::LaplacianEigen);

/// One 0/1 indicator per region level, levels in first-appearance order.
SpatialBasis region_basis(const SpatialDataset& d);

struct ExposureDecomposition {
  Vector a_c;   // projection onto the basis span
  Vector a_uc;  // residual, the instrument
  std::shared_ptr<const SpatialBasis> basis;
  Eigen::Index projection_rank = 0;
  bool zero_instrument = false;  // Var(a_uc) / Var(a) < 1e-12

  /// Var(a_c) / Var(a).
  double confounded_share() const;
  /// Var(a_uc) / Var(a).
  double instrument_share() const;
};

ExposureDecomposition decompose(const Vector& a, std::shared_ptr<const SpatialBasis> b);
ExposureDecomposition decompose(const Vector& a, const SpatialBasis& b);

struct DimensionChoice {
  int dimension = 0;
  double confounded_share = 0.0;
};

/// Smallest-step search over [min_dim, max_dim] for the dimension whose
/// Var(a_c)/Var(a) is closest to `target`, stopping at the first dimension that
/// reaches it.
DimensionChoice choose_dimension(const Vector& a, const std::function<SpatialBasis(int)>& make,
                                 int min_dim, int max_dim, double target);

/// Simple-kriging smoother decomposition with user-supplied Matern range and
/// nugget-to-sill ratio: a_c = mean + R (R + tau2 I)^{-1} (a - mean).
/// Not a projection, so the orthogonality guarantees of `decompose` do not hold.
ExposureDecomposition kriging_decompose(const Vector& a, const Matrix& coords, double theta,
                                        double nugget_ratio);

}  // namespace spatialiv

#endif
