#pragma once

#include <optional>
#include <string>
#include <vector>

#include "abd/config.hpp"
#include "abd/design.hpp"

namespace abd {

struct VerificationBlock {
    long n_total = 0;
    long reps_per_submodel = 0;
    std::vector<double> gamma;
    OcEstimates estimates;
};

/// Machine-readable run record. Contains only values reproducible from
/// (config, seed): no timings, no worker counts.
struct Report {
    std::string version;
    std::string config_hash;
    std::string config_canonical;  // canonical non-runtime config echo
    std::optional<DesignRecommendation> recommendation;
    std::optional<VerificationBlock> verification;
};

std::string report_to_json(const Report& report);

Report design_workflow(const DesignConfig& cfg);

/// Fresh panel at the given design; thresholds may repeat a single value
/// across metrics. When panel_out is non-null the simulated panel is copied
/// there (for tabular export).
VerificationBlock verify_design(const DesignConfig& cfg, long n_total,
                                const std::vector<double>& gamma, int reps_per_submodel,
                                ProbPanel* panel_out = nullptr);

struct BaselineResult {
    long n_total = 0;
    long n_a = 0;
    long n_b = 0;
    double gamma_eff = 0.0;
    OcEstimates estimates;
    std::vector<TraceRow> trace;
};

/// Family-wise comparison design: fixed thresholds 1 - alpha_total/K for all
/// metrics, smallest n reaching the power target. Power is measured by
/// direct simulation at every probed n; the FDR bound is not a constraint.
BaselineResult baseline_bonferroni(const DesignConfig& cfg, double alpha_total);

struct TableRow {
    std::string label;
    DesignRecommendation rec;
};

/// The six-design ladder: false-set sizes 1..4 under the common scheme plus
/// the combined mixture under both schemes.
std::vector<TableRow> emit_table1(const DesignConfig& cfg);
std::string table_to_csv(const std::vector<TableRow>& rows, int k);

}  // namespace abd
