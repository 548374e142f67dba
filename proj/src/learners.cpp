#include "spatialiv/learners.hpp"

#include <bit>
#include <cmath>
#include <limits>

namespace spatialiv {

std::string to_string(Learner l) {
  switch (l) {
    case Learner::Mean: return "mean";
    case Learner::Linear: return "linear";
    case Learner::Interactions: return "interactions";
    case Learner::QuadraticA: return "quadratic";
  }
  return "?";
}

Learner parse_learner(const std::string& s) {
  if (s == "mean") return Learner::Mean;
  if (s == "linear") return Learner::Linear;
  if (s == "interactions") return Learner::Interactions;
  if (s == "quadratic") return Learner::QuadraticA;
  throw Error(ErrorCode::ConfigError, "unknown learner '" + s + "'");
}

Matrix learner_features(const Matrix& x, Learner l) {
  const Eigen::Index n = x.rows(), q = x.cols();
  Eigen::Index cols = 1;
  if (l != Learner::Mean) cols += q;
  if (l == Learner::Interactions) cols += q * (q - 1) / 2;
  if (l == Learner::QuadraticA && q > 0) cols += 1;
  Matrix f(n, cols);
  f.col(0).setOnes();
  if (l == Learner::Mean) return f;
  f.middleCols(1, q) = x;
  Eigen::Index k = 1 + q;
  if (l == Learner::Interactions) {
    for (Eigen::Index i = 0; i < q; ++i) {
      for (Eigen::Index j = i + 1; j < q; ++j) f.col(k++) = x.col(i).cwiseProduct(x.col(j));
    }
  } else if (l == Learner::QuadraticA && q > 0) {
    f.col(k) = x.col(q - 1).cwiseAbs2();
  }
  return f;
}

namespace {

// Number of feature columns, used to detect learners that collapse onto others.
Eigen::Index feature_count(Eigen::Index q, Learner l) {
  switch (l) {
    case Learner::Mean: return 1;
    case Learner::Linear: return 1 + q;
    case Learner::Interactions: return 1 + q + q * (q - 1) / 2;
    case Learner::QuadraticA: return q > 0 ? 2 + q : 1;
  }
  return 0;
}

}  // namespace

Vector simplex_least_squares(const Matrix& p, const Vector& y) {
  const Eigen::Index m = p.cols();
  if (m < 1 || m > 16) throw Error(ErrorCode::InvalidArgument, "simplex LS supports 1..16 columns");
  if (p.rows() != y.size()) throw Error(ErrorCode::DimensionMismatch, "simplex LS sizes");
  Vector best_w = Vector::Zero(m);
  double best_loss = std::numeric_limits<double>::infinity();
  // subsets ordered by size, then lexicographically by index
  for (Eigen::Index size = 1; size <= m; ++size) {
    for (unsigned mask = 1; mask < (1u << m); ++mask) {
      if (std::popcount(mask) != size) continue;
      std::vector<Eigen::Index> idx;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (mask & (1u << j)) idx.push_back(j);
      }
      Vector w = Vector::Zero(m);
      const Eigen::Index first = idx.front();
      if (size == 1) {
        w(first) = 1.0;
      } else {
        // w = e_first + sum_k v_k (e_k - e_first), k in idx \ first
        Matrix design(p.rows(), size - 1);
        for (Eigen::Index k = 1; k < size; ++k) design.col(k - 1) = p.col(idx[k]) - p.col(first);
        const Vector v = least_squares(design, y - p.col(first)).coefficients;
        w(first) = 1.0 - v.sum();
        for (Eigen::Index k = 1; k < size; ++k) w(idx[k]) = v(k - 1);
        if ((w.array() < -1e-12).any()) continue;
        w = w.cwiseMax(0.0);
        w /= w.sum();
      }
      const double loss = (y - p * w).squaredNorm();
      if (loss < best_loss * (1.0 - 1e-10) - 1e-14) {
        best_loss = loss;
        best_w = w;
      }
    }
  }
  return best_w;
}

Matrix StackedRegression::standardize(const Matrix& inputs) const {
  if (inputs.cols() != center_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "learner input has wrong number of columns");
  }
  if (inputs.cols() == 0) return inputs;
  return (inputs.rowwise() - center_).array().rowwise() / scale_.array();
}

Matrix StackedRegression::features(const Matrix& standardized, Learner l) const {
  return learner_features(standardized, l);
}

StackedRegression StackedRegression::fit(const Matrix& inputs, const Vector& response,
                                         std::vector<Learner> learners, int folds) {
  const Eigen::Index n = inputs.rows(), q = inputs.cols();
  if (response.size() != n) throw Error(ErrorCode::DimensionMismatch, "learner response length");
  if (folds < 2 || folds > n) {
    throw Error(ErrorCode::KTooLarge, "fold count " + std::to_string(folds) +
                                          " must lie in [2, n = " + std::to_string(n) + "]");
  }
  if (learners.empty()) throw Error(ErrorCode::InvalidArgument, "empty learner stack");
  if (!inputs.allFinite() || !response.allFinite()) {
    throw Error(ErrorCode::SingularDesign, "non-finite learner inputs");
  }

  StackedRegression s;
  for (Learner l : learners) {
    bool duplicate = false;
    for (Learner prev : s.learners_) {
      if (prev == l) duplicate = true;
      // with a single variable, interactions collapse onto the linear fit
      if (l == Learner::Interactions && prev == Learner::Linear &&
          feature_count(q, l) == feature_count(q, prev)) duplicate = true;
      if (feature_count(q, l) == 1 && feature_count(q, prev) == 1) duplicate = true;
    }
    if (!duplicate) s.learners_.push_back(l);
  }

  s.center_ = q > 0 ? Eigen::RowVectorXd(inputs.colwise().mean()) : Eigen::RowVectorXd(0);
  s.scale_ = Eigen::RowVectorXd::Ones(q);
  for (Eigen::Index j = 0; j < q; ++j) {
    const double sd = std::sqrt((inputs.col(j).array() - s.center_(j)).square().mean());
    if (sd > 0.0) s.scale_(j) = sd;
  }
  const Matrix z = s.standardize(inputs);

  const auto m = static_cast<Eigen::Index>(s.learners_.size());
  Matrix oof(n, m);
  for (Eigen::Index l = 0; l < m; ++l) {
    const Matrix f = s.features(z, s.learners_[static_cast<std::size_t>(l)]);
    for (int k = 0; k < folds; ++k) {
      std::vector<Eigen::Index> train, test;
      for (Eigen::Index i = 0; i < n; ++i) (i % folds == k ? test : train).push_back(i);
      const auto fit = least_squares(f(train, Eigen::all), response(train));
      oof(test, l) = f(test, Eigen::all) * fit.coefficients;
    }
    s.coefficients_.push_back(least_squares(f, response).coefficients);
  }
  s.cv_risk_ = (oof.colwise() - response).colwise().squaredNorm().transpose() / static_cast<double>(n);
  s.weights_ = simplex_least_squares(oof, response);
  return s;
}

Vector StackedRegression::predict(const Matrix& inputs) const {
  const Matrix z = standardize(inputs);
  Vector out = Vector::Zero(inputs.rows());
  for (std::size_t l = 0; l < learners_.size(); ++l) {
    const double w = weights_(static_cast<Eigen::Index>(l));
    if (w == 0.0) continue;
    out += w * (features(z, learners_[l]) * coefficients_[l]);
  }
  return out;
}

double StackedRegression::predict_one(const Eigen::RowVectorXd& input) const {
  return predict(Matrix(input))(0);
}

}  // namespace spatialiv
