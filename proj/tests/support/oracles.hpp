// Independent reference computations for the test suites. Nothing here calls
// into the library; each oracle is a direct, slow, textbook formula.
#ifndef SPATIALIV_TESTS_ORACLES_HPP
#define SPATIALIV_TESTS_ORACLES_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

namespace oracle {

// Ascending-series modified Bessel K in long double. Good to ~1e-11 relative
// up to x = 10; cancellation eats the rest beyond that.
inline long double bessel_i(int nu, long double x) {
  long double term = 1.0L;
  for (int k = 1; k <= nu; ++k) term *= x / 2.0L / k;
  long double sum = term;
  const long double q = x * x / 4.0L;
  for (int k = 1; k < 400; ++k) {
    term *= q / (static_cast<long double>(k) * (k + nu));
    sum += term;
    if (term < 1e-30L * sum) break;
  }
  return sum;
}

inline long double bessel_k0(long double x) {
  const long double gamma = 0.57721566490153286060651209L;
  const long double q = x * x / 4.0L;
  long double term = 1.0L, harmonic = 0.0L, sum = 0.0L;
  for (int k = 1; k < 400; ++k) {
    term *= q / (static_cast<long double>(k) * k);
    harmonic += 1.0L / k;
    sum += term * harmonic;
    if (term * harmonic < 1e-30L * (std::fabs(sum) + 1e-300L)) break;
  }
  return -(std::log(x / 2.0L) + gamma) * bessel_i(0, x) + sum;
}

inline long double bessel_k1(long double x) {
  const long double gamma = 0.57721566490153286060651209L;
  const long double q = x * x / 4.0L;
  // psi(k+1) + psi(k+2) with psi(m+1) = -gamma + H_m
  long double term = 1.0L, hk = 0.0L;
  long double sum = (-gamma) + (-gamma + 1.0L);
  for (int k = 1; k < 400; ++k) {
    term *= q / (static_cast<long double>(k) * (k + 1));
    hk += 1.0L / k;
    const long double psis = (-gamma + hk) + (-gamma + hk + 1.0L / (k + 1));
    sum += term * psis;
    if (std::fabs(term * psis) < 1e-30L * std::fabs(sum)) break;
  }
  return 1.0L / x + std::log(x / 2.0L) * bessel_i(1, x) - x / 4.0L * sum;
}

inline long double bessel_k2(long double x) { return bessel_k0(x) + 2.0L / x * bessel_k1(x); }

// Composite Simpson on [lo, hi] with an even number of panels.
inline double simpson(const std::function<double(double)>& f, double lo, double hi, int panels = 4000) {
  if (panels % 2) ++panels;
  const double h = (hi - lo) / panels;
  double s = f(lo) + f(hi);
  for (int i = 1; i < panels; ++i) s += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

inline double normal_pdf(double x, double mean, double var) {
  const double u = x - mean;
  return std::exp(-0.5 * u * u / var) / std::sqrt(2.0 * M_PI * var);
}

// Outcome mean b0 + ba a + bu u + bau a u + ba2 a^2 + ba2u a^2 u.
struct Coefs {
  double b0, ba, bu, bau, ba2, ba2u;
};

// E(Y(min(A, c))) / E(Y) for A ~ N(ma, va), U | A linear with slope cov/va.
// The outcome is linear in U, so E(U | A) is all that matters. The integrand
// has a kink at c, so the range is split there.
inline double truncated_truth(const Coefs& b, double ma, double va, double mu, double cov, double c) {
  auto m_u = [&](double a) { return mu + cov / va * (a - ma); };
  auto y_at = [&](double capped, double a) {
    const double u = m_u(a);
    return b.b0 + b.ba * capped + b.bu * u + b.bau * capped * u + b.ba2 * capped * capped +
           b.ba2u * capped * capped * u;
  };
  const double sd = std::sqrt(va);
  const double lo = ma - 12.0 * sd, hi = ma + 12.0 * sd;
  const double cc = std::clamp(c, lo, hi);
  auto num_f = [&](double a) { return y_at(std::min(a, c), a) * normal_pdf(a, ma, va); };
  auto den_f = [&](double a) { return y_at(a, a) * normal_pdf(a, ma, va); };
  const double num = simpson(num_f, lo, cc) + simpson(num_f, cc, hi);
  const double den = simpson(den_f, lo, cc) + simpson(den_f, cc, hi);
  return num / den;
}

// Least squares through the SVD pseudo-inverse of the normal equations.
inline Eigen::VectorXd pinv_ls(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const Eigen::MatrixXd g = x.transpose() * x;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(g, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd s = svd.singularValues();
  const double tol = 1e-10 * (s.size() ? s(0) : 0.0);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > tol) inv(i) = 1.0 / s(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose() * (x.transpose() * y);
}

// Projection of v onto col(b).
inline Eigen::VectorXd project(const Eigen::MatrixXd& b, const Eigen::VectorXd& v) {
  return b * pinv_ls(b, v);
}

// Gaussian-kernel weighted least squares of y on [1, x - x0]; returns the intercept.
inline double local_linear(const Eigen::VectorXd& y, const Eigen::VectorXd& x, double h, double x0) {
  double s0 = 0, s1 = 0, s2 = 0, t0 = 0, t1 = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double d = x(i) - x0;
    const double w = std::exp(-0.5 * d * d / (h * h));
    s0 += w;
    s1 += w * d;
    s2 += w * d * d;
    t0 += w * y(i);
    t1 += w * d * y(i);
  }
  return (s2 * t0 - s1 * t1) / (s0 * s2 - s1 * s1);
}

inline double sample_cov(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double ma = a.mean(), mb = b.mean();
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) s += (a(i) - ma) * (b(i) - mb);
  return s / static_cast<double>(a.size() - 1);
}

// L = D - W for a path 0 - 1 - ... - (n-1).
inline Eigen::MatrixXd path_laplacian(int n) {
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) {
    l(i, i) += 1;
    l(i + 1, i + 1) += 1;
    l(i, i + 1) = l(i + 1, i) = -1;
  }
  return l;
}

}  // namespace oracle

#endif
