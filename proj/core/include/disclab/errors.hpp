#pragma once

#include <stdexcept>
#include <string>

namespace disclab {

// Base class for all library errors. `kind()` is the stable machine-readable
// tag that experiment reports use to classify per-cell failures.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define DISCLAB_ERROR(Name)                                        \
  class Name : public Error {                                      \
   public:                                                         \
    explicit Name(const std::string& message)                      \
        : Error(#Name, std::string(#Name) + ": " + message) {}     \
  }

DISCLAB_ERROR(UnknownSystem);
DISCLAB_ERROR(WindowTooLarge);
DISCLAB_ERROR(EmptyLibrary);
DISCLAB_ERROR(DimensionMismatch);
DISCLAB_ERROR(TooFewSnapshots);
DISCLAB_ERROR(SingularTruncation);
DISCLAB_ERROR(CholeskyFailed);
DISCLAB_ERROR(GridMismatch);
DISCLAB_ERROR(EmptyRegion);
DISCLAB_ERROR(DivisionByZeroRmse);
DISCLAB_ERROR(ApproachMismatch);
DISCLAB_ERROR(IoError);
DISCLAB_ERROR(ConfigError);

#undef DISCLAB_ERROR

// Integration blew up (state left the admissible range or the step size
// underflowed). Carries the time at which the failure was detected.
class IntegrationDiverged : public Error {
 public:
  IntegrationDiverged(const std::string& message, double t)
      : Error("IntegrationDiverged",
              "IntegrationDiverged: " + message + " at t=" + std::to_string(t)),
        time_(t) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

// Training loss became NaN/Inf. Carries the epoch index for diagnosis.
class NonFiniteLoss : public Error {
 public:
  NonFiniteLoss(const std::string& message, int epoch)
      : Error("NonFiniteLoss",
              "NonFiniteLoss: " + message + " at epoch " + std::to_string(epoch)),
        epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

}  // namespace disclab
