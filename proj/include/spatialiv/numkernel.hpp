#ifndef SPATIALIV_NUMKERNEL_HPP
#define SPATIALIV_NUMKERNEL_HPP

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "spatialiv/error.hpp"

namespace spatialiv {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense symmetric matrix. The constructor symmetrizes its input as (M + M^T)/2,
/// so entries(i, j) == entries(j, i) holds bit-for-bit afterwards.
class SymMatrix {
 public:
  explicit SymMatrix(const Matrix& m);

  Eigen::Index n() const noexcept { return entries_.rows(); }
  const Matrix& entries() const noexcept { return entries_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }
  double max_abs() const { return entries_.cwiseAbs().maxCoeff(); }

 private:
  Matrix entries_;
};

struct EigenDecomposition {
  Vector eigenvalues;   // ascending
  Matrix eigenvectors;  // orthonormal columns, matching eigenvalues
};

struct CholeskyFactor {
  Matrix lower;
  double jitter = 0.0;
};

inline const std::vector<double>& default_jitter_ladder() {
  static const std::vector<double> ladder{0.0, 1e-10, 1e-8, 1e-6};
  return ladder;
}

/// Factor m + jitter*I for the first ladder entry that yields a positive
/// definite matrix. Throws NotPositiveDefinite when the ladder is exhausted.
CholeskyFactor cholesky_jittered(const SymMatrix& m,
                                 std::span<const double> jitter_ladder = default_jitter_ladder());

/// Ascending eigendecomposition. Each eigenvector is signed so that its
/// largest-magnitude entry is positive (ties go to the lowest index).
EigenDecomposition sym_eigen(const SymMatrix& m);

struct LeastSquaresFit {
  Vector coefficients;
  Vector fitted;
  Vector residuals;
  Eigen::Index rank = 0;
};

/// Minimum-norm least squares via complete orthogonal decomposition.
/// Pivots below 1e-10 of the leading pivot are treated as zero.
LeastSquaresFit least_squares(const Matrix& design, const Vector& response);

/// Modified Bessel function of the second kind, integer order 0, 1 or 2.
double bessel_k(int nu, double x);

namespace stats {

double mean(const Vector& v);
/// Sample variance with n - 1 denominator; 0 for fewer than two values.
double variance(const Vector& v);
double covariance(const Vector& a, const Vector& b);
double correlation(const Vector& a, const Vector& b);
/// Linear-interpolation quantile (R type 7).
double quantile(std::vector<double> values, double p);

}  // namespace stats

}  // namespace spatialiv

#endif
