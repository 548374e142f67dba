#include "spatialiv/numkernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace spatialiv {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::EmptyAfterFiltering: return "EmptyAfterFiltering";
    case ErrorCode::NonNumericValue: return "NonNumericValue";
    case ErrorCode::InvalidDataset: return "InvalidDataset";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::DfOutOfRange: return "DfOutOfRange";
    case ErrorCode::DegenerateCoordinates: return "DegenerateCoordinates";
    case ErrorCode::MOutOfRange: return "MOutOfRange";
    case ErrorCode::NoRegionLabels: return "NoRegionLabels";
    case ErrorCode::ZeroInstrumentVariance: return "ZeroInstrumentVariance";
    case ErrorCode::BasisWithoutConstant: return "BasisWithoutConstant";
    case ErrorCode::SingularDesign: return "SingularDesign";
    case ErrorCode::EmptySubpopulation: return "EmptySubpopulation";
    case ErrorCode::DegenerateWindow: return "DegenerateWindow";
    case ErrorCode::ZeroDenominator: return "ZeroDenominator";
    case ErrorCode::InvalidInterval: return "InvalidInterval";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

SymMatrix::SymMatrix(const Matrix& m) {
  if (m.rows() < 1 || m.rows() != m.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "SymMatrix requires a non-empty square matrix");
  }
  entries_ = 0.5 * (m + m.transpose());
}

CholeskyFactor cholesky_jittered(const SymMatrix& m, std::span<const double> jitter_ladder) {
  if (jitter_ladder.empty()) {
    throw Error(ErrorCode::InvalidArgument, "jitter ladder must not be empty");
  }
  const Eigen::Index n = m.n();
  std::ostringstream tried;
  for (double jitter : jitter_ladder) {
    Matrix shifted = m.entries();
    shifted.diagonal().array() += jitter;
    Eigen::LLT<Matrix> llt(shifted);
    if (llt.info() == Eigen::Success) {
      // LLT only fails on non-positive pivots; also reject NaN factors.
      Matrix lower = llt.matrixL();
      if (lower.allFinite() && (lower.diagonal().array() > 0.0).all()) {
        return {std::move(lower), jitter};
      }
    }
    tried << jitter << ' ';
  }
  throw Error(ErrorCode::NotPositiveDefinite,
              "Cholesky failed for " + std::to_string(n) + "x" + std::to_string(n) +
                  " matrix with every jitter tried: " + tried.str());
}

EigenDecomposition sym_eigen(const SymMatrix& m) {
  if (!m.entries().allFinite()) {
    throw Error(ErrorCode::DomainError, "sym_eigen requires finite entries");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m.entries());
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::NoConvergence, "symmetric eigensolver did not converge (n = " +
                                              std::to_string(m.n()) + ")");
  }
  EigenDecomposition out{solver.eigenvalues(), solver.eigenvectors()};
  for (Eigen::Index j = 0; j < out.eigenvectors.cols(); ++j) {
    auto col = out.eigenvectors.col(j);
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < col.size(); ++i) {
      // strict comparison keeps the lowest index on exact ties
      if (std::abs(col(i)) > best + 1e-12 * best) {
        best = std::abs(col(i));
        arg = i;
      }
    }
    if (col(arg) < 0.0) col *= -1.0;
  }
  return out;
}

LeastSquaresFit least_squares(const Matrix& design, const Vector& response) {
  if (design.rows() != response.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "design has " + std::to_string(design.rows()) + " rows but response has " +
                    std::to_string(response.size()));
  }
  if (design.rows() < 1 || design.cols() < 1) {
    throw Error(ErrorCode::DimensionMismatch, "least_squares needs n >= 1 and p >= 1");
  }
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod;
  cod.setThreshold(1e-10);
  cod.compute(design);
  LeastSquaresFit fit;
  fit.coefficients = cod.solve(response);
  fit.fitted = design * fit.coefficients;
  fit.residuals = response - fit.fitted;
  fit.rank = cod.rank();
  return fit;
}

namespace {

constexpr double kEuler = 0.57721566490153286061;

// Power series, accurate for 0 < x <= 2.
//   K0(x) = -(ln(x/2) + gamma) I0(x) + sum_k H_k t^k / (k!)^2,   t = x^2/4
//   K1(x) = 1/x + ln(x/2) I1(x) - (x/4) sum_k (psi(k+1) + psi(k+2)) t^k / (k!(k+1)!)
void bessel_k01_series(double x, double& k0, double& k1) {
  const double t = 0.25 * x * x;
  const double log_half = std::log(0.5 * x);
  double i0 = 0.0, s0 = 0.0;
  double i1 = 0.0, s1 = 0.0;
  double term0 = 1.0;        // t^k / (k!)^2
  double term1 = 1.0;        // t^k / (k! (k+1)!)
  double harmonic = 0.0;     // H_k
  double psi_k1 = -kEuler;   // psi(k+1)
  for (int k = 0; k < 60; ++k) {
    const double psi_k2 = psi_k1 + 1.0 / (k + 1);
    i0 += term0;
    s0 += harmonic * term0;
    i1 += term1;
    s1 += (psi_k1 + psi_k2) * term1;
    if (term0 < 1e-18 * i0 && k > 2) break;
    harmonic += 1.0 / (k + 1);
    psi_k1 = psi_k2;
    term0 *= t / ((k + 1.0) * (k + 1.0));
    term1 *= t / ((k + 1.0) * (k + 2.0));
  }
  k0 = -(log_half + kEuler) * i0 + s0;
  k1 = 1.0 / x + log_half * (0.5 * x * i1) - 0.25 * x * s1;
}

// Steed's continued fraction (Temme's CF2 form) for x > 2, order 0 and 1.
void bessel_k01_cf(double x, double& k0, double& k1) {
  const double a1 = 0.25;
  double b = 2.0 * (1.0 + x);
  double d = 1.0 / b;
  double h = d, delh = d;
  double q1 = 0.0, q2 = 1.0;
  double q = a1, c = a1;
  double a = -a1;
  double s = 1.0 + q * delh;
  int i = 1;
  for (; i <= 10000; ++i) {
    a -= 2 * i;
    c = -a * c / (i + 1.0);
    const double qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    const double dels = q * delh;
    s += dels;
    if (std::abs(dels / s) < 1e-16) break;
  }
  if (i > 10000) {
    throw Error(ErrorCode::NoConvergence, "bessel_k continued fraction, x = " + std::to_string(x));
  }
  h *= a1;
  k0 = std::sqrt(std::numbers::pi / (2.0 * x)) * std::exp(-x) / s;
  k1 = k0 * (x + 0.5 - h) / x;
}

}  // namespace

double bessel_k(int nu, double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw Error(ErrorCode::DomainError, "bessel_k requires finite x > 0, got " + std::to_string(x));
  }
  if (nu < 0 || nu > 2) {
    throw Error(ErrorCode::DomainError, "bessel_k supports orders 0, 1, 2");
  }
  double k0 = 0.0, k1 = 0.0;
  if (x <= 2.0) {
    bessel_k01_series(x, k0, k1);
  } else {
    bessel_k01_cf(x, k0, k1);
  }
  switch (nu) {
    case 0: return k0;
    case 1: return k1;
    default: return k0 + (2.0 / x) * k1;
  }
}

namespace stats {

double mean(const Vector& v) { return v.size() == 0 ? 0.0 : v.mean(); }

double variance(const Vector& v) {
  if (v.size() < 2) return 0.0;
  const double m = v.mean();
  return (v.array() - m).square().sum() / static_cast<double>(v.size() - 1);
}

double covariance(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::DimensionMismatch, "covariance length mismatch");
  if (a.size() < 2) return 0.0;
  return ((a.array() - a.mean()) * (b.array() - b.mean())).sum() /
         static_cast<double>(a.size() - 1);
}

double correlation(const Vector& a, const Vector& b) {
  const double denom = std::sqrt(variance(a) * variance(b));
  return denom > 0.0 ? covariance(a, b) / denom : 0.0;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "quantile of empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace stats

}  // namespace spatialiv
