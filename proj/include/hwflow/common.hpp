// Shared error types and small helpers.
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace hwflow {

// Raised when an adaptive numeric routine fails to converge. Carries the best
// estimate reached and the error bound it could certify.
class numeric_error : public std::runtime_error {
 public:
  numeric_error(const std::string& what, double estimate, double error_bound)
      : std::runtime_error(what), estimate_(estimate), error_bound_(error_bound) {}
  double estimate() const { return estimate_; }
  double error_bound() const { return error_bound_; }

 private:
  double estimate_;
  double error_bound_;
};

// Raised when a structural invariant of an input object is violated
// (e.g. a local-time path that is not nondecreasing).
class invariant_error : public std::logic_error {
  using std::logic_error::logic_error;
};

inline void require(bool cond, const char* msg) {
  if (!cond) throw std::domain_error(msg);
}

inline void require_finite(double x, const char* name) {
  if (!std::isfinite(x)) throw std::domain_error(std::string(name) + " must be finite");
}

}  // namespace hwflow
