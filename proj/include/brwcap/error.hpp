#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace brwcap {

enum class Errc {
  kNotCritical,
  kDegenerateDelta1,
  kNegativeMass,
  kDivergentSum,
  kInvalidLaw,
  kQuadratureNotConverged,
  kDivergentAtOrigin,
  kBoxTooSmall,
  kOriginNotAllowed,
  kCeilingExceeded,
  kInfeasibleSize,
  kRejectionBudgetExceeded,
  kSizeTooLarge,
  kWindowOutOfRange,
  kInsufficientMaterialization,
  kSingularSystem,
  kSizeCeiling,
  kRadiusOverflow,
  kKilledTableMissing,
  kTailNotConverged,
  kGridBiasExceedsTolerance,
  kCacheMiss,
  kConfigError,
  kIoError,
};

const char* errc_name(Errc code);

// Single exception type for the library; `detail` carries an optional
// integer diagnostic (e.g. the partial tree size on kCeilingExceeded).
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what, std::int64_t detail = 0)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code),
        detail_(detail) {}

  Errc code() const noexcept { return code_; }
  std::int64_t detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::int64_t detail_;
};

}  // namespace brwcap
