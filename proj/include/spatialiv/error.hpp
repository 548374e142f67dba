#ifndef SPATIALIV_ERROR_HPP
#define SPATIALIV_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace spatialiv {

enum class ErrorCode {
  NotPositiveDefinite,
  NoConvergence,
  DimensionMismatch,
  DomainError,
  InvalidArgument,
  // data
  MissingColumn,
  EmptyAfterFiltering,
  NonNumericValue,
  InvalidDataset,
  IoError,
  KTooLarge,
  // bases
  DfOutOfRange,
  DegenerateCoordinates,
  MOutOfRange,
  NoRegionLabels,
  // estimation
  ZeroInstrumentVariance,
  BasisWithoutConstant,
  SingularDesign,
  EmptySubpopulation,
  DegenerateWindow,
  ZeroDenominator,
  InvalidInterval,
  // configuration
  ConfigError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Library-wide exception; `code()` lets callers map failures to exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace spatialiv

#endif
