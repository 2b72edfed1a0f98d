#pragma once

#include <string>
#include <vector>

#include "abd/panel.hpp"

namespace abd {

/// Per-metric decision thresholds, each in [0.5, 1).
struct ThresholdVector {
    std::vector<double> gamma;

    void validate(int k) const;
};

/// Per-repetition discovery tallies: false discoveries, true discoveries,
/// and the number of true hypotheses.
struct ClassificationCounts {
    std::vector<int> v;
    std::vector<int> s;
    std::vector<int> t;

    long rows() const { return static_cast<long>(v.size()); }
};

struct OcEstimates {
    double fdr_hat = 0.0;
    double power_hat = 0.0;
    double fdr_mcse = 0.0;
    double power_mcse = 0.0;
};

/// Discovery rule: estimated probability >= gamma_k.
ClassificationCounts classify(const ProbPanel& panel, const ThresholdVector& gamma);

/// fdr_hat = mean of v / max(v+s, 1); power_hat = mean of s / max(t, 1);
/// MCSEs are the standard errors of those row means.
OcEstimates estimate_oc(const ClassificationCounts& counts);

struct ThresholdScheme {
    enum class Kind { Common, Boxed };
    Kind kind = Kind::Common;
    double box = 0.05;
};

/// Threshold optimization outcome. Infeasibility (no threshold meets the FDR
/// bound) is a value, not an error: the sample-size search probes n values
/// where the bound cannot be met and treats their power as 0.
struct GammaOptResult {
    bool feasible = false;
    ThresholdVector gamma;
    OcEstimates estimates;
};

/// Smallest common threshold gamma (over the panel's probability values and
/// 0.5) with fdr_hat <= q, applied to every metric. When no candidate
/// satisfies the bound, returns the largest candidate flagged infeasible.
GammaOptResult optimize_gamma_common(const ProbPanel& panel, double q);

/// Per-metric thresholds maximizing power subject to fdr_hat <= q and
/// max_k gamma_k - min_k gamma_k <= box. Exhaustive over per-metric
/// classification cuts when the panel is small enough; otherwise greedy
/// coordinate moves (single lowers and lower+raise pairs) from the common
/// solution followed by a local grid polish. Weakly dominates the common
/// scheme's power on every panel.
GammaOptResult optimize_gamma_boxed(const ProbPanel& panel, double q, double box);

GammaOptResult optimize_gamma(const ProbPanel& panel, double q, const ThresholdScheme& scheme);

struct ThresholdScanRow {
    double gamma = 0.0;
    double fdr_hat = 0.0;
    double power_hat = 0.0;
};

/// Common-threshold scan trace over all candidates (descending), for plots.
std::vector<ThresholdScanRow> common_threshold_scan(const ProbPanel& panel);
std::string scan_to_csv(const std::vector<ThresholdScanRow>& rows);

}  // namespace abd
