#ifndef SPATIALIV_LEARNERS_HPP
#define SPATIALIV_LEARNERS_HPP

#include <string>
#include <vector>

#include "spatialiv/numkernel.hpp"

namespace spatialiv {

/// Candidate regressions in the stack. `QuadraticA` adds the square of the
/// last input variable (the exposure) to the linear terms.
enum class Learner { Mean, Linear, Interactions, QuadraticA };

std::string to_string(Learner l);
Learner parse_learner(const std::string& s);

/// Convex stack of least-squares learners. Inputs are standardized with the
/// training means and standard deviations before features are built, which
/// leaves each learner's column span unchanged.
class StackedRegression {
 public:
  /// Stacking weights minimize out-of-fold squared error over the simplex;
  /// unit i belongs to fold i mod `folds`. Learners whose design duplicates an
  /// earlier learner are dropped.
  static StackedRegression fit(const Matrix& inputs, const Vector& response,
                               std::vector<Learner> learners, int folds);

  Vector predict(const Matrix& inputs) const;
  double predict_one(const Eigen::RowVectorXd& input) const;

  const std::vector<Learner>& learners() const noexcept { return learners_; }
  const Vector& weights() const noexcept { return weights_; }
  const Vector& cv_risk() const noexcept { return cv_risk_; }

 private:
  Matrix features(const Matrix& standardized, Learner l) const;
  Matrix standardize(const Matrix& inputs) const;

  std::vector<Learner> learners_;
  std::vector<Vector> coefficients_;
  Vector weights_;
  Vector cv_risk_;
  Eigen::RowVectorXd center_;
  Eigen::RowVectorXd scale_;
};

/// Minimizes ||y - P w||^2 over the probability simplex by enumerating
/// faces. Exact ties go to the smaller, earlier subset of columns.
Vector simplex_least_squares(const Matrix& predictions, const Vector& response);

/// Learner feature columns for already-standardized inputs (n x q).
Matrix learner_features(const Matrix& inputs, Learner l);

}  // namespace spatialiv

#endif
