#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "abd/model.hpp"
#include "abd/oc.hpp"
#include "abd/panel.hpp"
#include "abd/proxy.hpp"

namespace abd {

/// Per-repetition lines modelling logit posterior probabilities as functions
/// of the total sample size n.
struct LogitLineField {
    enum class Basis { LimitSlope, TwoPoint };
    Basis basis = Basis::LimitSlope;
    int k = 0;
    int reps_per_submodel = 0;
    int num_submodels = 0;
    long n_anchor0 = 0;
    long n_anchor1 = 0;            // two-point only
    std::vector<double> slope;     // m x k
    std::vector<double> intercept; // m x k; line(n) = intercept + slope * n
    std::vector<int> submodel_index;
    std::vector<char> truth;       // m x k
    /// Two-point provenance: pairing[(sub*reps + d)*k + metric] is the row
    /// whose n1 logit holds rank d within its (submodel, metric) subgroup.
    std::vector<long> pairing;

    long rows() const { return static_cast<long>(submodel_index.size()); }
    double line_at(long r, int metric, double n) const {
        const size_t c = static_cast<size_t>(r) * k + metric;
        return intercept[c] + slope[c] * n;
    }
};

/// Lines through each (n0, logit) anchor carrying the limiting slopes.
LogitLineField extrapolate_limit_slopes(const ProbPanel& panel0, const SlopeField& slopes);

/// Synthesizes the panel the field predicts at n; no simulation happens.
ProbPanel evaluate_at(const LogitLineField& field, long n);

/// Rank-matched two-point lines within each (submodel, metric) subgroup;
/// each line is attributed to the row achieving its rank at n1, preserving
/// cross-metric dependence through that row grouping. Ties sort stably by
/// row index.
LogitLineField refit_two_point(const ProbPanel& panel0, const ProbPanel& panel1);

struct TraceRow {
    std::string stage;   // "sim" | "probe" | "result"
    std::string basis;   // "limit-slope" | "two-point" | "panel"
    long n = 0;
    bool feasible = false;
    double fdr_hat = 0.0;
    double power_hat = 0.0;
    std::vector<double> gamma;
};

/// Smallest n in [n_lo, n_hi] whose optimal thresholds meet both bounds
/// under the line field: geometric bracketing (seeded by n_hint when given,
/// typically a simulation anchor near the crossing), bisection on the power
/// criterion, then a downward scan of up to 64 steps to certify local
/// minimality. Throws RangeExhaustedError when no n in range qualifies.
struct PowerSearchResult {
    long n = 0;
    ThresholdVector gamma;
    OcEstimates estimates;
};
PowerSearchResult smallest_power_n(const LogitLineField& field, const ThresholdScheme& scheme,
                                   double q, double beta, long n_lo, long n_hi,
                                   std::vector<TraceRow>* trace = nullptr, long n_hint = 0);

struct DesignSettings {
    double q = 0.05;
    double beta = 0.2;
    long n0 = 24000;  // total across both groups
    double c = 1.0;
    int reps_per_submodel = 1000;
    ThresholdScheme scheme;
    uint64_t seed = 1;
    int workers = 1;
    long max_n = 100000000;  // search cap while widening n_hi

    void validate() const;
};

struct DesignRecommendation {
    long n_total = 0;
    long n_a = 0;
    long n_b = 0;
    ThresholdVector gamma;
    OcEstimates estimates;  // under the final line field at n_total
    long n0 = 0;
    long n1 = 0;
    long sim_passes = 0;
    std::vector<TraceRow> trace;
};

/// The full two-simulation procedure: simulate at n0, extrapolate with
/// limiting slopes, locate n1, re-simulate, refit rank-matched lines, locate
/// the final n. Exactly two simulated panels per invocation.
DesignRecommendation run_design(const ModelFamily& family, const PsiMixture& psi,
                                const MetricPanel& panel, const PosteriorConfig& cfg,
                                const DesignSettings& settings);

std::string trace_to_csv(const std::vector<TraceRow>& trace, int k);

}  // namespace abd
