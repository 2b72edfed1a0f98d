#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "abd/core.hpp"
#include "abd/design.hpp"
#include "abd/model.hpp"

namespace abd {

/// Full input tuple for a design run, loadable from a JSON config file.
/// `workers` is a runtime knob: it round-trips through config files but is
/// excluded from the canonical form and hash so reports do not depend on the
/// executing machine.
struct DesignConfig {
    // metric panel: per-metric open intervals; null endpoint = infinite
    std::vector<HypothesisSpec> deltas = std::vector<HypothesisSpec>(
        kOutcomes, HypothesisSpec{0.0, kInf});

    // data-generation model
    std::string psi_type = "all30";  // "all30" | "sizes" | "explicit"
    std::array<double, kOutcomes> marginals_a{0.489, 0.230, 0.156, 0.047, 0.032};
    double effect = 0.10;
    std::vector<int> lambda_sizes;   // for psi_type == "sizes"
    std::string mixture_file;        // for psi_type == "explicit"
    bool independent = false;        // independent-binomial variant

    // analysis prior / posterior sampling
    double prior_alpha = 1.0;        // Dirichlet concentration, same for all cells
    int posterior_draws = 4000;
    double clip_eps = 0.0;           // 0 = default 1/(2*draws)
    double bandwidth_scale = 1.0;    // kernel CDF smoothing; 0 = indicator
    std::string lp_objective = "maxmin";  // "maxmin" | "any"

    // design criteria and search
    double c = 1.0;
    double q = 0.05;
    double beta = 0.2;
    int reps_per_submodel = 1000;
    long n0_per_group = 12000;
    std::string scheme = "common";   // "common" | "boxed"
    double box = 0.05;
    uint64_t seed = 1;
    int workers = 0;                 // 0 = hardware concurrency
    long max_n_total = 100000000;

    // baseline comparison
    double alpha_total = 0.05;
    int baseline_reps_per_submodel = 0;  // 0 = reps_per_submodel
    int baseline_draws = 0;              // 0 = posterior_draws

    void validate() const;

    MetricPanel metric_panel() const;
    PosteriorConfig posterior_config() const;
    ThresholdScheme threshold_scheme() const;
    const ModelFamily& family() const;
    /// Builds the mixture (solves the construction programs, or loads the
    /// explicit mixture file).
    PsiMixture build_psi() const;
    long n0_total() const;
    int effective_workers() const;
    DesignSettings design_settings() const;
};

/// Parses a JSON config document; error messages name the offending field.
DesignConfig parse_config(const std::string& json_text);
DesignConfig load_config_file(const std::string& path);

/// Canonical serialization: keys sorted, no whitespace, 17-significant-digit
/// numbers. include_runtime adds the workers field (config files keep it;
/// hashes and report echoes do not).
std::string serialize_config(const DesignConfig& cfg, bool include_runtime = true);

/// FNV-1a 64 over the canonical non-runtime serialization, as 16 hex chars.
std::string config_hash(const DesignConfig& cfg);

}  // namespace abd
