#ifndef SPATIALIV_LINEAR_IV_HPP
#define SPATIALIV_LINEAR_IV_HPP

#include <string>

#include "spatialiv/basis.hpp"

namespace spatialiv {

enum class IvStrategy { TwoSLS, TwoSRI, DoublePrediction };

std::string to_string(IvStrategy s);
IvStrategy parse_iv_strategy(const std::string& s);

struct IvFit {
  double beta = 0.0;
  double intercept = 0.0;
  IvStrategy strategy = IvStrategy::TwoSLS;
  double instrument_variance_share = 0.0;  // Var(a_uc) / Var(a)
};

/// Outcome regressed on [1, a_uc].
IvFit fit_2sls(const Vector& y, const ExposureDecomposition& dec);

/// Outcome regressed on [1, a_uc, a_c]; beta is the a_uc coefficient.
IvFit fit_2sri(const Vector& y, const ExposureDecomposition& dec);

/// Both outcome and exposure residualized on the basis, then the outcome
/// residual regressed on the exposure residual. The basis must span the constant.
IvFit fit_double_prediction(const Vector& y, const Vector& a, const SpatialBasis& b);

/// Unsmoothed spatial+: stage 1 regresses a on the basis, stage 2 regresses y
/// on [stage-1 residual, basis]. Returns the residual's coefficient.
double spatial_plus_beta(const Vector& y, const Vector& a, const SpatialBasis& b);

}  // namespace spatialiv

#endif
