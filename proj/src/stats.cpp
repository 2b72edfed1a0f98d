#include "abd/stats.hpp"

#include <algorithm>
#include <vector>

namespace abd {

namespace {

double logsumexp2(double a, double b) {
    const double m = std::max(a, b);
    if (m == -kInf) return -kInf;
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace

double log_norm_cdf(double x) {
    if (x >= -1.0) {
        // upper region: 1 - Phi(x) is the small quantity
        return std::log1p(-0.5 * std::erfc(x * M_SQRT1_2));
    }
    if (x > -37.0) {
        return std::log(0.5 * std::erfc(-x * M_SQRT1_2));
    }
    // deep lower tail: Mills-ratio asymptotic expansion
    const double t2 = x * x;
    const double inv = 1.0 / t2;
    const double series = inv * (-1.0 + inv * (3.0 + inv * (-15.0 + inv * 105.0)));
    return -0.5 * t2 - std::log(-x) - 0.5 * std::log(2.0 * M_PI) + std::log1p(series);
}

// Wichura's algorithm AS 241 (PPND16).
double norm_quantile(double p) {
    static const double a[8] = {
        3.3871328727963666080e0,  1.3314166789178437745e2, 1.9715909503065514427e3,
        1.3731693765509461125e4,  4.5921953931549871457e4, 6.7265770927008700853e4,
        3.3430575583588128105e4,  2.5090809287301226727e3};
    static const double b[8] = {
        1.0,                      4.2313330701600911252e1, 6.8718700749205790830e2,
        5.3941960214247511077e3,  2.1213794301586595867e4, 3.9307895800092710610e4,
        2.8729085735721942674e4,  5.2264952788528545610e3};
    static const double c[8] = {
        1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
        3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
        2.27238449892691845833e-2, 7.74545014278341407640e-4};
    static const double d[8] = {
        1.0,                      2.05319162663775882187e0, 1.67638483018380384940e0,
        6.89767334985100004550e-1, 1.48103976427480074590e-1, 1.51986665636164571966e-2,
        5.47593808499534494600e-4, 1.05075007164441684324e-9};
    static const double e[8] = {
        6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
        2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
        2.71155556874348757815e-5, 2.01033439929228813265e-7};
    static const double f[8] = {
        1.0,                      5.99832206555887937690e-1, 1.36929880922735805310e-1,
        1.48753612908506148525e-2, 7.86869131145613259100e-4, 1.84631831751005468180e-5,
        1.42151175831644588870e-7, 2.04426310338993978564e-15};

    auto poly = [](const double* k, double r) {
        return ((((((k[7] * r + k[6]) * r + k[5]) * r + k[4]) * r + k[3]) * r + k[2]) * r + k[1]) * r + k[0];
    };

    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q * poly(a, r) / poly(b, r);
    }
    double r = (q < 0.0) ? p : 1.0 - p;
    if (r <= 0.0) return (q < 0.0) ? -kInf : kInf;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = poly(c, r) / poly(d, r);
    } else {
        r -= 5.0;
        val = poly(e, r) / poly(f, r);
    }
    return (q < 0.0) ? -val : val;
}

double logit_interval_prob(double x_lo, double x_hi) {
    double log_p;
    if (x_lo == -kInf) {
        log_p = log_norm_cdf(x_hi);
    } else if (x_hi == kInf) {
        log_p = log_norm_cdf(-x_lo);
    } else {
        const double la = log_norm_cdf(x_hi);
        const double lb = log_norm_cdf(x_lo);
        log_p = la + std::log1p(-std::exp(lb - la));
    }
    // 1 - p = Phi(-x_hi) + Phi(x_lo)
    const double log_q = logsumexp2(x_hi == kInf ? -kInf : log_norm_cdf(-x_hi),
                                    x_lo == -kInf ? -kInf : log_norm_cdf(x_lo));
    return log_p - log_q;
}

double ks_uniform_distance(const double* xs, int n) {
    std::vector<double> v(xs, xs + n);
    std::sort(v.begin(), v.end());
    double d = 0.0;
    for (int i = 0; i < n; ++i) {
        d = std::max(d, (i + 1.0) / n - v[i]);
        d = std::max(d, v[i] - static_cast<double>(i) / n);
    }
    return d;
}

}  // namespace abd
