#include "spatialiv/linear_iv.hpp"

#include <cmath>

namespace spatialiv {

std::string to_string(IvStrategy s) {
  switch (s) {
    case IvStrategy::TwoSLS: return "2sls";
    case IvStrategy::TwoSRI: return "2sri";
    case IvStrategy::DoublePrediction: return "doublepred";
  }
  return "unknown";
}

IvStrategy parse_iv_strategy(const std::string& s) {
  if (s == "2sls") return IvStrategy::TwoSLS;
  if (s == "2sri") return IvStrategy::TwoSRI;
  if (s == "doublepred") return IvStrategy::DoublePrediction;
  throw Error(ErrorCode::ConfigError, "unknown IV strategy '" + s + "'");
}

namespace {

void require_instrument(const ExposureDecomposition& dec, Eigen::Index n) {
  if (dec.a_uc.size() != n || dec.a_c.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "outcome and decomposition lengths differ");
  }
  if (dec.zero_instrument || !(stats::variance(dec.a_uc) > 0.0)) {
    throw Error(ErrorCode::ZeroInstrumentVariance,
                "instrument has no variance left after removing the spatial basis");
  }
}

}  // namespace

IvFit fit_2sls(const Vector& y, const ExposureDecomposition& dec) {
  require_instrument(dec, y.size());
  Matrix design(y.size(), 2);
  design.col(0).setOnes();
  design.col(1) = dec.a_uc;
  const auto fit = least_squares(design, y);
  return {fit.coefficients(1), fit.coefficients(0), IvStrategy::TwoSLS, dec.instrument_share()};
}

IvFit fit_2sri(const Vector& y, const ExposureDecomposition& dec) {
  require_instrument(dec, y.size());
  Matrix design(y.size(), 3);
  design.col(0).setOnes();
  design.col(1) = dec.a_uc;
  design.col(2) = dec.a_c;
  const auto fit = least_squares(design, y);
  return {fit.coefficients(1), fit.coefficients(0), IvStrategy::TwoSRI, dec.instrument_share()};
}

IvFit fit_double_prediction(const Vector& y, const Vector& a, const SpatialBasis& b) {
  if (!b.includes_constant) {
    throw Error(ErrorCode::BasisWithoutConstant,
                "double prediction needs a basis spanning the constant");
  }
  const auto dec_a = decompose(a, b);
  require_instrument(dec_a, y.size());
  const auto y_uc = least_squares(b.matrix, y).residuals;
  Matrix design(y.size(), 2);
  design.col(0).setOnes();
  design.col(1) = dec_a.a_uc;
  const auto fit = least_squares(design, y_uc);
  return {fit.coefficients(1), fit.coefficients(0), IvStrategy::DoublePrediction,
          dec_a.instrument_share()};
}

double spatial_plus_beta(const Vector& y, const Vector& a, const SpatialBasis& b) {
  const auto stage1 = least_squares(b.matrix, a);
  Matrix design(y.size(), 1 + b.matrix.cols());
  design.col(0) = stage1.residuals;
  design.rightCols(b.matrix.cols()) = b.matrix;
  return least_squares(design, y).coefficients(0);
}

}  // namespace spatialiv
