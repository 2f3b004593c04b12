#pragma once

#include <limits>
#include <stdexcept>
#include <string>

namespace mbscc {

/// Argument outside the mathematical domain of a function (negative rate, t > T, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Invalid model or experiment configuration. Raised before any computation starts.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical solve could not produce a trustworthy answer.
///
/// `lo_residual` / `hi_residual` carry the residuals at the bracket endpoints
/// when the failure is a non-bracketing root search; both are NaN otherwise.
class SolverError : public std::runtime_error {
public:
    explicit SolverError(const std::string& what,
                         double lo_residual = std::numeric_limits<double>::quiet_NaN(),
                         double hi_residual = std::numeric_limits<double>::quiet_NaN())
        : std::runtime_error(what), lo_residual_(lo_residual), hi_residual_(hi_residual) {}

    double lo_residual() const noexcept { return lo_residual_; }
    double hi_residual() const noexcept { return hi_residual_; }

private:
    double lo_residual_;
    double hi_residual_;
};

namespace detail {

inline void require_domain(bool ok, const char* what) {
    if (!ok) throw DomainError(what);
}

inline void require_config(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

}  // namespace detail
}  // namespace mbscc
