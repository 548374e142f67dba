#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "../support/oracles.hpp"
#include "spatialiv/numkernel.hpp"
#include "spatialiv/rng.hpp"

using namespace spatialiv;

namespace {

Matrix random_symmetric(std::mt19937_64& gen, int n) {
  std::normal_distribution<double> z;
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = z(gen);
  return (m + m.transpose()) / 2.0;
}

}  // namespace

TEST_CASE("SymMatrix symmetrizes its input exactly") {
  Matrix m(2, 2);
  m << 1.0, 2.0, 4.0, 3.0;
  const SymMatrix s(m);
  CHECK(s(0, 1) == s(1, 0));
  CHECK(s(0, 1) == doctest::Approx(3.0));
}

TEST_CASE("cholesky: identity and a hand-factored 2x2") {
  const auto id = cholesky_jittered(SymMatrix(Matrix::Identity(4, 4)));
  CHECK(id.jitter == 0.0);
  CHECK((id.lower - Matrix::Identity(4, 4)).norm() < 1e-15);

  Matrix m(2, 2);
  m << 4, 2, 2, 3;
  const auto f = cholesky_jittered(SymMatrix(m));
  // l11 = sqrt(4), l21 = 2 / l11, l22 = sqrt(3 - l21^2)
  CHECK(f.lower(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(f.lower(1, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(f.lower(1, 1) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(f.lower(0, 1) == 0.0);
}

TEST_CASE("cholesky: rank one matrix needs jitter, indefinite matrix fails") {
  Matrix m(2, 2);
  m << 1, 1, 1, 1;
  const auto f = cholesky_jittered(SymMatrix(m));
  CHECK(f.jitter >= 1e-10);

  Matrix bad(2, 2);
  bad << 1, 0, 0, -1;
  try {
    (void)cholesky_jittered(SymMatrix(bad));
    FAIL("expected NotPositiveDefinite");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotPositiveDefinite);
  }
}

TEST_CASE("cholesky property: residual small for random SPD matrices") {
  std::mt19937_64 gen(11);
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 2 + rep % 30;
    const Matrix r = random_symmetric(gen, n);
    const Matrix m = r * r.transpose() + 0.1 * Matrix::Identity(n, n);
    const auto f = cholesky_jittered(SymMatrix(m));
    const Matrix resid = f.lower * f.lower.transpose() - m - f.jitter * Matrix::Identity(n, n);
    CHECK(resid.norm() < 1e-8 * (1.0 + m.norm()));
  }
}

TEST_CASE("sym_eigen: diagonal and 2x2 by hand") {
  const auto d = sym_eigen(SymMatrix(Eigen::Vector3d(3, 1, 2).asDiagonal().toDenseMatrix()));
  CHECK(d.eigenvalues(0) == doctest::Approx(1));
  CHECK(d.eigenvalues(1) == doctest::Approx(2));
  CHECK(d.eigenvalues(2) == doctest::Approx(3));
  CHECK(d.eigenvectors(1, 0) == doctest::Approx(1.0));

  Matrix m(2, 2);
  m << 2, 1, 1, 2;
  const auto e = sym_eigen(SymMatrix(m));
  CHECK(e.eigenvalues(0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(e.eigenvalues(1) == doctest::Approx(3.0).epsilon(1e-14));
  const double r = 1.0 / std::sqrt(2.0);
  // (1, -1)/sqrt 2 up to sign; the sign rule makes the first (tied) entry positive
  CHECK(e.eigenvectors(0, 0) == doctest::Approx(r));
  CHECK(e.eigenvectors(1, 0) == doctest::Approx(-r));
  CHECK(e.eigenvectors(0, 1) == doctest::Approx(r));
  CHECK(e.eigenvectors(1, 1) == doctest::Approx(r));
}

TEST_CASE("sym_eigen: path Laplacian has one zero eigenvalue") {
  const auto e = sym_eigen(SymMatrix(oracle::path_laplacian(6)));
  CHECK(std::abs(e.eigenvalues(0)) < 1e-12);
  CHECK(e.eigenvalues(1) > 1e-3);
  // closed form 2 - 2 cos(k pi / n)
  for (int k = 0; k < 6; ++k) {
    CHECK(e.eigenvalues(k) == doctest::Approx(2.0 - 2.0 * std::cos(k * M_PI / 6.0)).epsilon(1e-12));
  }
}

TEST_CASE("sym_eigen property: reconstruction, orthonormality, sign rule") {
  std::mt19937_64 gen(5);
  for (int rep = 0; rep < 40; ++rep) {
    const int n = 1 + rep;
    const Matrix m = random_symmetric(gen, n);
    const auto e = sym_eigen(SymMatrix(m));
    const Matrix& v = e.eigenvectors;
    const double scale = 1.0 + m.norm();
    CHECK((v * e.eigenvalues.asDiagonal() * v.transpose() - m).norm() < 1e-10 * scale);
    CHECK((v.transpose() * v - Matrix::Identity(n, n)).norm() < 1e-10 * n);
    for (int k = 0; k + 1 < n; ++k) CHECK(e.eigenvalues(k) <= e.eigenvalues(k + 1));
    for (int k = 0; k < n; ++k) {
      Eigen::Index idx;
      v.col(k).cwiseAbs().maxCoeff(&idx);
      CHECK(v(idx, k) > 0.0);
    }
  }
}

TEST_CASE("least_squares: intercept only, exact fit, duplicated columns") {
  Vector y(4);
  y << 1, 2, 3, 10;
  const auto mean_fit = least_squares(Matrix::Ones(4, 1), y);
  CHECK(mean_fit.coefficients(0) == doctest::Approx(4.0));

  Matrix x(4, 2);
  x << 1, 0, 1, 1, 1, 2, 1, 3;
  const Vector yl = 2.0 * x.col(0) + 3.0 * x.col(1);
  const auto exact = least_squares(x, yl);
  CHECK(exact.coefficients(0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(exact.coefficients(1) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(exact.residuals.norm() < 1e-12);

  Matrix dup(5, 3);
  dup << 1, 2, 2, 1, -1, -1, 1, 0.5, 0.5, 1, 3, 3, 1, 0, 0;
  Vector yd(5);
  yd << 1, 0, 2, 5, -1;
  const auto fit = least_squares(dup, yd);
  CHECK(fit.rank == 2);
  const Vector ref = oracle::pinv_ls(dup, yd);
  CHECK((fit.coefficients - ref).norm() < 1e-10);
  CHECK(fit.coefficients(1) == doctest::Approx(fit.coefficients(2)));
}

TEST_CASE("least_squares: mismatched rows") {
  CHECK_THROWS_AS(least_squares(Matrix::Ones(3, 1), Vector::Ones(4)), Error);
}

TEST_CASE("least_squares property: residual orthogonal to the design") {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> z;
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 10 + rep, p = 1 + rep % 7;
    Matrix x(n, p);
    Vector y(n);
    for (int i = 0; i < n; ++i) {
      y(i) = z(gen);
      for (int j = 0; j < p; ++j) x(i, j) = z(gen);
    }
    const auto fit = least_squares(x, y);
    CHECK((x.transpose() * fit.residuals).norm() < 1e-10 * (1.0 + x.norm() * y.norm()));
    CHECK((fit.coefficients - oracle::pinv_ls(x, y)).norm() < 1e-8);
  }
}

TEST_CASE("bessel_k: reference values at x = 1") {
  CHECK(bessel_k(0, 1.0) == doctest::Approx(0.42102443824).epsilon(1e-10));
  CHECK(bessel_k(1, 1.0) == doctest::Approx(0.60190723020).epsilon(1e-10));
  CHECK(bessel_k(2, 1.0) == doctest::Approx(1.62483889).epsilon(1e-8));
}

TEST_CASE("bessel_k: series oracle agrees with high-precision constants") {
  // 20-digit values of K0, K1, K2 at 0.5, 2 and 10
  CHECK(static_cast<double>(oracle::bessel_k0(0.5L)) == doctest::Approx(0.92441907122766586178).epsilon(1e-13));
  CHECK(static_cast<double>(oracle::bessel_k1(2.0L)) == doctest::Approx(0.13986588181652242728).epsilon(1e-13));
  CHECK(static_cast<double>(oracle::bessel_k2(10.0L)) ==
        doctest::Approx(0.000021509817006932768731).epsilon(1e-10));
}

TEST_CASE("bessel_k property: recurrence and monotonicity") {
  for (double x : {0.1, 0.5, 1.0, 2.0, 5.0, 10.0}) {
    const double lhs = bessel_k(2, x);
    const double rhs = bessel_k(0, x) + 2.0 / x * bessel_k(1, x);
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::abs(lhs));
  }
  for (int nu = 0; nu <= 2; ++nu) {
    double prev = bessel_k(nu, 0.01);
    for (int i = 1; i <= 400; ++i) {
      const double v = bessel_k(nu, 0.01 + 0.05 * i);
      CHECK(v < prev);
      prev = v;
    }
  }
}

TEST_CASE("bessel_k: domain errors") {
  CHECK_THROWS_AS(bessel_k(0, 0.0), Error);
  CHECK_THROWS_AS(bessel_k(0, -1.0), Error);
  CHECK_THROWS_AS(bessel_k(3, 1.0), Error);
}

TEST_CASE("stats helpers") {
  Vector v(4);
  v << 1, 2, 3, 4;
  CHECK(stats::mean(v) == doctest::Approx(2.5));
  CHECK(stats::variance(v) == doctest::Approx(5.0 / 3.0));
  CHECK(stats::correlation(v, 2.0 * v) == doctest::Approx(1.0));
  CHECK(stats::quantile({1, 2, 3, 4}, 0.5) == doctest::Approx(2.5));
  CHECK(stats::quantile({1, 2, 3, 4}, 0.0) == doctest::Approx(1.0));
}

TEST_CASE("counter rng: deterministic, stream-separated, uniform in (0, 1)") {
  CounterRng a(42, 0), b(42, 0), c(42, 1);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const double u = a.uniform();
    CHECK(u == b.uniform());
    CHECK(u > 0.0);
    CHECK(u < 1.0);
    differs = differs || u != c.uniform();
  }
  CHECK(differs);

  CounterRng g(7, 2);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = g.normal();
    s += z;
    s2 += z * z;
  }
  CHECK(std::abs(s / n) < 4.0 / std::sqrt(n));
  CHECK(std::abs(s2 / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("philox known-answer vector") {
  // Random123 kat_vectors: philox4x32_10 with zero counter and key
  const auto out = philox4x32_10({0, 0, 0, 0}, {0, 0});
  CHECK(out[0] == 0x6627e8d5u);
  CHECK(out[1] == 0xe169c58du);
  CHECK(out[2] == 0xbc57ac4cu);
  CHECK(out[3] == 0x9b00dbd8u);
}
