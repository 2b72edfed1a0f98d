#include "abd/report.hpp"

#include <cmath>
#include <sstream>

#include "abd/construct.hpp"
#include "abd/csv.hpp"
#include "abd/errors.hpp"
#include "abd/simulate.hpp"

namespace abd {

namespace {

constexpr const char* kVersion = "0.1.0";

void write_gamma(std::ostringstream& out, const std::vector<double>& gamma) {
    out << '[';
    for (size_t i = 0; i < gamma.size(); ++i) {
        if (i) out << ',';
        out << fmt17(gamma[i]);
    }
    out << ']';
}

void write_estimates(std::ostringstream& out, const OcEstimates& est) {
    out << "{\"fdr_hat\":" << fmt17(est.fdr_hat) << ",\"fdr_mcse\":" << fmt17(est.fdr_mcse)
        << ",\"power_hat\":" << fmt17(est.power_hat)
        << ",\"power_mcse\":" << fmt17(est.power_mcse) << '}';
}

}  // namespace

std::string report_to_json(const Report& report) {
    std::ostringstream out;
    out << "{\"version\":\"" << report.version << "\"";
    out << ",\"config_hash\":\"" << report.config_hash << "\"";
    out << ",\"config\":" << report.config_canonical;
    out << ",\"recommendation\":";
    if (report.recommendation) {
        const auto& r = *report.recommendation;
        out << "{\"n_total\":" << r.n_total << ",\"n_a\":" << r.n_a << ",\"n_b\":" << r.n_b;
        out << ",\"gamma\":";
        write_gamma(out, r.gamma.gamma);
        out << ",\"estimates\":";
        write_estimates(out, r.estimates);
        out << ",\"n0\":" << r.n0 << ",\"n1\":" << r.n1
            << ",\"sim_passes\":" << r.sim_passes << '}';
    } else {
        out << "null";
    }
    out << ",\"verification\":";
    if (report.verification) {
        const auto& v = *report.verification;
        out << "{\"n_total\":" << v.n_total
            << ",\"reps_per_submodel\":" << v.reps_per_submodel << ",\"gamma\":";
        write_gamma(out, v.gamma);
        out << ",\"estimates\":";
        write_estimates(out, v.estimates);
        out << '}';
    } else {
        out << "null";
    }
    out << '}';
    return out.str();
}

Report design_workflow(const DesignConfig& cfg) {
    cfg.validate();
    const MetricPanel panel = cfg.metric_panel();
    const PsiMixture psi = cfg.build_psi();
    const DesignRecommendation rec =
        run_design(cfg.family(), psi, panel, cfg.posterior_config(), cfg.design_settings());
    Report report;
    report.version = kVersion;
    report.config_hash = config_hash(cfg);
    report.config_canonical = serialize_config(cfg, false);
    report.recommendation = rec;
    return report;
}

VerificationBlock verify_design(const DesignConfig& cfg, long n_total,
                                const std::vector<double>& gamma, int reps_per_submodel,
                                ProbPanel* panel_out) {
    cfg.validate();
    const MetricPanel panel = cfg.metric_panel();
    const PsiMixture psi = cfg.build_psi();
    std::vector<double> gvec = gamma;
    if (gvec.size() == 1) gvec.assign(panel.k(), gamma[0]);
    ThresholdVector tv{gvec};
    tv.validate(panel.k());

    const AllocationPlan plan{cfg.c, n_total};
    const ProbPanel prob_panel =
        build_panel_for(cfg.family(), psi, panel, plan, cfg.posterior_config(),
                        reps_per_submodel, cfg.seed, kPassVerify, cfg.effective_workers());
    VerificationBlock block;
    block.n_total = n_total;
    block.reps_per_submodel = reps_per_submodel;
    block.gamma = gvec;
    block.estimates = estimate_oc(classify(prob_panel, tv));
    if (panel_out) *panel_out = prob_panel;
    return block;
}

BaselineResult baseline_bonferroni(const DesignConfig& cfg, double alpha_total) {
    cfg.validate();
    if (!(alpha_total > 0.0 && alpha_total < 1.0))
        throw ValidationError("baseline: alpha_total must lie in (0,1)");
    const MetricPanel panel = cfg.metric_panel();
    const PsiMixture psi = cfg.build_psi();
    const int K = panel.k();
    const double gamma_eff = 1.0 - alpha_total / K;
    if (!(gamma_eff >= 0.5 && gamma_eff < 1.0))
        throw ValidationError("baseline: 1 - alpha_total/K must lie in [0.5, 1)");
    ThresholdVector tv{std::vector<double>(K, gamma_eff)};

    PosteriorConfig pc = cfg.posterior_config();
    if (cfg.baseline_draws > 0) pc.draws = cfg.baseline_draws;
    pc.clip_eps = 0.0;  // rescale the default to the draw count in use
    const int reps = cfg.baseline_reps_per_submodel > 0 ? cfg.baseline_reps_per_submodel
                                                        : cfg.reps_per_submodel;
    const double target = 1.0 - cfg.beta;

    BaselineResult result;
    result.gamma_eff = gamma_eff;

    uint32_t probe_idx = 0;
    auto eval_at = [&](long n_total) {
        const AllocationPlan plan{cfg.c, n_total};
        const ProbPanel p =
            build_panel_for(cfg.family(), psi, panel, plan, pc, reps, cfg.seed,
                            kPassBaseline + probe_idx, cfg.effective_workers());
        ++probe_idx;
        const OcEstimates est = estimate_oc(classify(p, tv));
        result.trace.push_back({"probe", "panel", n_total, true, est.fdr_hat, est.power_hat,
                                tv.gamma});
        return est;
    };

    // exponential bracket from n0, then integer bisection on the power curve
    long lo = 2;
    long hi = std::max<long>(4, cfg.n0_total());
    OcEstimates est_hi = eval_at(hi);
    while (est_hi.power_hat < target) {
        lo = hi;
        if (hi >= cfg.max_n_total)
            throw RangeExhaustedError("baseline: power target unreachable below max_n_total",
                                      lo, hi, est_hi.power_hat, true);
        hi = std::min(cfg.max_n_total, hi * 2);
        est_hi = eval_at(hi);
    }
    OcEstimates best = est_hi;
    while (hi - lo > 1) {
        const long mid = lo + (hi - lo) / 2;
        const OcEstimates est = eval_at(mid);
        if (est.power_hat >= target) {
            hi = mid;
            best = est;
        } else {
            lo = mid;
        }
    }
    result.n_total = hi;
    const GroupSizes sizes = split_allocation({cfg.c, hi});
    result.n_a = sizes.n_a;
    result.n_b = sizes.n_b;
    result.estimates = best;
    return result;
}

std::vector<TableRow> emit_table1(const DesignConfig& cfg) {
    cfg.validate();
    if (cfg.psi_type != "all30")
        throw ValidationError("emit_table1: requires psi_type=all30");
    const MetricPanel panel = cfg.metric_panel();
    const long m_target = static_cast<long>(cfg.reps_per_submodel) * 30;

    std::vector<TableRow> rows;
    for (int size = 1; size <= 4; ++size) {
        const PsiMixture psi = build_psi_subsets(cfg.marginals_a, cfg.effect, panel, {size});
        DesignSettings settings = cfg.design_settings();
        settings.scheme.kind = ThresholdScheme::Kind::Common;
        settings.reps_per_submodel = std::max<int>(
            1, static_cast<int>(std::llround(static_cast<double>(m_target) / psi.size())));
        const DesignRecommendation rec =
            run_design(cfg.family(), psi, panel, cfg.posterior_config(), settings);
        rows.push_back({"lambda_size_" + std::to_string(size), rec});
    }
    const PsiMixture psi30 = cfg.build_psi();
    {
        DesignSettings settings = cfg.design_settings();
        settings.scheme.kind = ThresholdScheme::Kind::Common;
        rows.push_back({"combined_common",
                        run_design(cfg.family(), psi30, panel, cfg.posterior_config(), settings)});
    }
    {
        DesignSettings settings = cfg.design_settings();
        settings.scheme.kind = ThresholdScheme::Kind::Boxed;
        settings.scheme.box = cfg.box;
        rows.push_back({"combined_boxed",
                        run_design(cfg.family(), psi30, panel, cfg.posterior_config(), settings)});
    }
    return rows;
}

std::string table_to_csv(const std::vector<TableRow>& rows, int k) {
    std::ostringstream out;
    out << "label,n_a,n_total";
    for (int i = 0; i < k; ++i) out << ",gamma_" << i;
    out << ",fdr_hat,fdr_mcse,power_hat,power_mcse\n";
    for (const auto& row : rows) {
        out << row.label << ',' << row.rec.n_a << ',' << row.rec.n_total;
        for (int i = 0; i < k; ++i) {
            out << ',';
            if (i < static_cast<int>(row.rec.gamma.gamma.size()))
                out << fmt17(row.rec.gamma.gamma[i]);
        }
        out << ',' << fmt17(row.rec.estimates.fdr_hat) << ',' << fmt17(row.rec.estimates.fdr_mcse)
            << ',' << fmt17(row.rec.estimates.power_hat) << ','
            << fmt17(row.rec.estimates.power_mcse) << "\n";
    }
    return out.str();
}

}  // namespace abd
