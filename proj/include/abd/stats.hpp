#pragma once

#include <cmath>
#include <limits>

namespace abd {

constexpr double kInf = std::numeric_limits<double>::infinity();

inline double norm_pdf(double x) {
    static const double inv_sqrt_2pi = 0.3989422804014326779;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

inline double norm_cdf(double x) {
    return 0.5 * std::erfc(-x * M_SQRT1_2);
}

/// log Phi(x), stable far into the lower tail (|x| up to ~1e4).
double log_norm_cdf(double x);

/// Inverse standard normal CDF (Wichura's PPND16), p in (0,1).
double norm_quantile(double p);

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

inline double expit(double l) {
    if (l >= 0.0) return 1.0 / (1.0 + std::exp(-l));
    const double e = std::exp(l);
    return e / (1.0 + e);
}

/// logit of Phi(x_hi) - Phi(x_lo) without forming the probability.
/// Endpoints may be +/-inf; requires x_lo < x_hi.
double logit_interval_prob(double x_lo, double x_hi);

/// Kolmogorov-Smirnov distance of a sample against U(0,1). Sorts a copy.
double ks_uniform_distance(const double* xs, int n);

}  // namespace abd
