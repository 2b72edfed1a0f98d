#include "abd/rng.hpp"

#include <cmath>

#include "abd/errors.hpp"
#include "abd/stats.hpp"

namespace abd {

namespace {

constexpr uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(uint32_t a, uint32_t b, uint32_t& hi, uint32_t& lo) {
    const uint64_t p = static_cast<uint64_t>(a) * b;
    hi = static_cast<uint32_t>(p >> 32);
    lo = static_cast<uint32_t>(p);
}

// Tail of the Stirling series for log k!; exact table for small k.
double stirling_tail(long k) {
    static const double tab[16] = {
        0.08106146679532726,  0.04134069595540929,  0.02767792568499834,
        0.02079067210376509,  0.01664469118982119,  0.01387612882307075,
        0.01189670994589177,  0.01041126526197209,  0.009255462182712733,
        0.008330563433362871, 0.007573675487951841, 0.006942840107209530,
        0.006408994188004207, 0.005951370112758848, 0.005554733551962801,
        0.005207655919609640};
    if (k < 16) return tab[k];
    const double kp1 = static_cast<double>(k) + 1.0;
    const double kp1sq = kp1 * kp1;
    return (1.0 / 12.0 - (1.0 / 360.0 - 1.0 / 1260.0 / kp1sq) / kp1sq) / kp1;
}

}  // namespace

std::array<uint32_t, 4> Philox::block(const std::array<uint32_t, 4>& ctr,
                                      const std::array<uint32_t, 2>& key) {
    uint32_t x0 = ctr[0], x1 = ctr[1], x2 = ctr[2], x3 = ctr[3];
    uint32_t k0 = key[0], k1 = key[1];
    for (int round = 0; round < 10; ++round) {
        uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kPhiloxM0, x0, hi0, lo0);
        mulhilo(kPhiloxM1, x2, hi1, lo1);
        const uint32_t y0 = hi1 ^ x1 ^ k0;
        const uint32_t y1 = lo1;
        const uint32_t y2 = hi0 ^ x3 ^ k1;
        const uint32_t y3 = lo0;
        x0 = y0; x1 = y1; x2 = y2; x3 = y3;
        k0 += kPhiloxW0;
        k1 += kPhiloxW1;
    }
    return {x0, x1, x2, x3};
}

StreamRng::StreamRng(uint64_t seed, uint64_t stream) {
    key_ = {static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32)};
    ctr_ = {0u, 0u, static_cast<uint32_t>(stream), static_cast<uint32_t>(stream >> 32)};
}

uint32_t StreamRng::next_u32() {
    if (buf_pos_ == 4) {
        buf_ = Philox::block(ctr_, key_);
        if (++ctr_[0] == 0) ++ctr_[1];
        buf_pos_ = 0;
    }
    return buf_[buf_pos_++];
}

uint64_t StreamRng::next_u64() {
    const uint64_t lo = next_u32();
    const uint64_t hi = next_u32();
    return (hi << 32) | lo;
}

double StreamRng::uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double StreamRng::open01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double StreamRng::normal() {
    return norm_quantile(open01());
}

// Marsaglia-Tsang squeeze method.
double StreamRng::gamma(double alpha) {
    if (!(alpha > 0.0)) throw ValidationError("gamma: alpha must be > 0");
    if (alpha < 1.0) {
        const double boost = std::pow(open01(), 1.0 / alpha);
        return gamma(alpha + 1.0) * boost;
    }
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = open01();
        const double x2 = x * x;
        if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
        if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
}

double StreamRng::beta(double a, double b) {
    const double x = gamma(a);
    const double y = gamma(b);
    return x / (x + y);
}

void StreamRng::dirichlet(const double* alpha, double* out, int k) {
    double sum = 0.0;
    for (int i = 0; i < k; ++i) {
        out[i] = gamma(alpha[i]);
        sum += out[i];
    }
    for (int i = 0; i < k; ++i) out[i] /= sum;
}

long StreamRng::binomial_inversion(long n, double p) {
    // requires small n*p; pmf(0) cannot underflow here
    const double q = 1.0 - p;
    const double s = p / q;
    const double a = (n + 1) * s;
    double r = std::exp(n * std::log1p(-p));
    double u = uniform01();
    long x = 0;
    while (u > r) {
        u -= r;
        ++x;
        if (x > n) {  // numerical leftover mass; retry
            r = std::exp(n * std::log1p(-p));
            u = uniform01();
            x = 0;
            continue;
        }
        r *= (a / x - s);
    }
    return x;
}

// Hormann's BTRS transformed-rejection sampler; requires p <= 0.5, n*p >= 10.
long StreamRng::binomial_btrs(long n, double p) {
    const double nd = static_cast<double>(n);
    const double spq = std::sqrt(nd * p * (1.0 - p));
    const double b = 1.15 + 2.53 * spq;
    const double a = -0.0873 + 0.0248 * b + 0.01 * p;
    const double c = nd * p + 0.5;
    const double v_r = 0.92 - 4.2 / b;
    const double r = p / (1.0 - p);
    const double alpha = (2.83 + 5.1 / b) * spq;
    const long m = static_cast<long>(std::floor((nd + 1.0) * p));
    for (;;) {
        const double u = uniform01() - 0.5;
        double v = uniform01();
        const double us = 0.5 - std::fabs(u);
        const long k = static_cast<long>(std::floor((2.0 * a / us + b) * u + c));
        if (us >= 0.07 && v <= v_r) {
            if (k < 0 || k > n) continue;
            return k;
        }
        if (k < 0 || k > n) continue;
        v = std::log(v * alpha / (a / (us * us) + b));
        const double ub =
            (m + 0.5) * std::log((m + 1.0) / (r * (nd - m + 1.0))) +
            (nd + 1.0) * std::log((nd - m + 1.0) / (nd - k + 1.0)) +
            (k + 0.5) * std::log(r * (nd - k + 1.0) / (k + 1.0)) +
            stirling_tail(m) + stirling_tail(n - m) - stirling_tail(k) - stirling_tail(n - k);
        if (v <= ub) return k;
    }
}

long StreamRng::binomial(long n, double p) {
    if (n < 0) throw ValidationError("binomial: n must be >= 0");
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("binomial: p must be in [0,1]");
    if (n == 0 || p == 0.0) return 0;
    if (p == 1.0) return n;
    if (p > 0.5) return n - binomial(n, 1.0 - p);
    if (static_cast<double>(n) * p < 10.0) return binomial_inversion(n, p);
    return binomial_btrs(n, p);
}

void StreamRng::multinomial(long n, const double* probs, long* counts, int k) {
    // suffix sums keep the conditional probabilities well scaled
    double tail = 0.0;
    for (int i = 0; i < k; ++i) tail += probs[i];
    long remaining = n;
    for (int i = 0; i < k; ++i) {
        if (remaining == 0 || i == k - 1) {
            counts[i] = remaining;
            remaining = 0;
            tail -= probs[i];
            continue;
        }
        double pc = (tail > 0.0) ? probs[i] / tail : 1.0;
        if (pc > 1.0) pc = 1.0;
        if (pc < 0.0) pc = 0.0;
        counts[i] = binomial(remaining, pc);
        remaining -= counts[i];
        tail -= probs[i];
    }
}

}  // namespace abd
