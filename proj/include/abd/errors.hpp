#pragma once

#include <stdexcept>
#include <string>

namespace abd {

/// Input or invariant violation; the message names the failing constraint.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// A submodel/group construction could not be completed (infeasible targets).
struct ConstructionError : std::runtime_error {
    explicit ConstructionError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure (non-PD covariance, degenerate hypothesis, ...).
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// Sample-size search exhausted its [n_lo, n_hi] range; carries boundary diagnostics.
struct RangeExhaustedError : std::runtime_error {
    long n_lo = 0;
    long n_hi = 0;
    double power_at_hi = 0.0;
    bool feasible_at_hi = false;
    RangeExhaustedError(const std::string& what, long lo, long hi, double pwr, bool feas)
        : std::runtime_error(what), n_lo(lo), n_hi(hi), power_at_hi(pwr), feasible_at_hi(feas) {}
};

}  // namespace abd
