#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace mcpl {

/// Bad user-supplied configuration (file contents, CLI flags, parameter ranges).
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// API misuse: a precondition stated in a function contract was violated.
class contract_violation : public std::logic_error {
public:
    explicit contract_violation(const std::string& msg) : std::logic_error(msg) {}
};

/// A quadrature failed to reach its tolerance. Carries the best estimate and
/// the last observed change so callers can decide whether to accept it.
class convergence_error : public std::runtime_error {
public:
    convergence_error(const std::string& msg, std::complex<double> estimate, double error_bound)
        : std::runtime_error(msg + " (estimate " + std::to_string(std::abs(estimate)) +
                             ", error bound " + std::to_string(error_bound) + ")"),
          estimate_(estimate),
          error_bound_(error_bound) {}

    std::complex<double> estimate() const { return estimate_; }
    double error_bound() const { return error_bound_; }

private:
    std::complex<double> estimate_;
    double error_bound_;
};

/// Cache file problems: bad magic, version mismatch, checksum failure, truncation.
class cache_error : public std::runtime_error {
public:
    explicit cache_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace mcpl
