#pragma once

#include <array>
#include <cstdint>

namespace abd {

// Philox4x32-10 counter-based generator. A (seed, stream) pair selects an
// independent substream; output depends only on (seed, stream, position), so
// results are identical under any parallel schedule.
struct Philox {
    static std::array<uint32_t, 4> block(const std::array<uint32_t, 4>& ctr,
                                         const std::array<uint32_t, 2>& key);
};

/// Work-unit identifiers packed into a 64-bit stream id.
/// phase: 0..15, pass: 0..255, submodel: 0..4095, rep: 0..2^40-1.
inline uint64_t make_stream(uint32_t phase, uint32_t pass, uint32_t submodel, uint64_t rep) {
    return (static_cast<uint64_t>(phase & 0xFu) << 60) |
           (static_cast<uint64_t>(pass & 0xFFu) << 52) |
           (static_cast<uint64_t>(submodel & 0xFFFu) << 40) |
           (rep & 0xFFFFFFFFFFull);
}

enum class Phase : uint32_t { Dataset = 0, Posterior = 1, Proxy = 2, Misc = 3 };

class StreamRng {
public:
    StreamRng(uint64_t seed, uint64_t stream);

    uint32_t next_u32();
    uint64_t next_u64();

    /// Uniform on [0, 1).
    double uniform01();
    /// Uniform on (0, 1); safe as a quantile-function argument.
    double open01();
    double normal();
    double gamma(double alpha);
    double beta(double a, double b);
    /// alpha and out have length k.
    void dirichlet(const double* alpha, double* out, int k);
    long binomial(long n, double p);
    /// probs sums to 1 (length k); writes counts summing to n.
    void multinomial(long n, const double* probs, long* counts, int k);

private:
    std::array<uint32_t, 2> key_;
    std::array<uint32_t, 4> ctr_;
    std::array<uint32_t, 4> buf_;
    int buf_pos_ = 4;

    long binomial_btrs(long n, double p);
    long binomial_inversion(long n, double p);
};

}  // namespace abd
