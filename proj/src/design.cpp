#include "abd/design.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>

#include "abd/csv.hpp"
#include "abd/errors.hpp"
#include "abd/simulate.hpp"
#include "abd/stats.hpp"

namespace abd {

LogitLineField extrapolate_limit_slopes(const ProbPanel& panel0, const SlopeField& slopes) {
    panel0.validate();
    const long m = panel0.rows();
    if (slopes.k != panel0.k || static_cast<long>(slopes.slopes.size()) != m * panel0.k)
        throw ValidationError("extrapolate_limit_slopes: slope field does not match the panel");
    LogitLineField field;
    field.basis = LogitLineField::Basis::LimitSlope;
    field.k = panel0.k;
    field.reps_per_submodel = panel0.reps_per_submodel;
    field.num_submodels = panel0.num_submodels;
    field.n_anchor0 = panel0.n;
    field.submodel_index = panel0.submodel_index;
    field.truth = panel0.truth;
    const size_t cells = static_cast<size_t>(m) * panel0.k;
    field.slope.resize(cells);
    field.intercept.resize(cells);
    for (size_t c = 0; c < cells; ++c) {
        field.slope[c] = slopes.slopes[c];
        field.intercept[c] = panel0.logits[c] - slopes.slopes[c] * static_cast<double>(panel0.n);
    }
    return field;
}

ProbPanel evaluate_at(const LogitLineField& field, long n) {
    if (n < 2) throw ValidationError("evaluate_at: n >= 2 required");
    ProbPanel panel;
    panel.k = field.k;
    panel.n = n;
    panel.reps_per_submodel = field.reps_per_submodel;
    panel.num_submodels = field.num_submodels;
    panel.submodel_index = field.submodel_index;
    panel.truth = field.truth;
    const size_t cells = field.slope.size();
    panel.probs.resize(cells);
    panel.logits.resize(cells);
    // keep synthesized probabilities strictly inside (0,1) even where expit
    // saturates in double precision
    const double lo = std::nextafter(0.0, 1.0);
    const double hi = std::nextafter(1.0, 0.0);
    for (size_t c = 0; c < cells; ++c) {
        const double l = field.intercept[c] + field.slope[c] * static_cast<double>(n);
        panel.logits[c] = l;
        panel.probs[c] = std::clamp(expit(l), lo, hi);
    }
    panel.seed_record.source = "lines";
    return panel;
}

LogitLineField refit_two_point(const ProbPanel& panel0, const ProbPanel& panel1) {
    panel0.validate();
    panel1.validate();
    if (panel0.k != panel1.k || panel0.rows() != panel1.rows() ||
        panel0.reps_per_submodel != panel1.reps_per_submodel ||
        panel0.num_submodels != panel1.num_submodels)
        throw ValidationError("refit_two_point: panel shapes differ");
    if (panel0.submodel_index != panel1.submodel_index)
        throw ValidationError("refit_two_point: submodel orderings differ");
    if (panel0.n == panel1.n)
        throw ValidationError("refit_two_point: anchors need distinct sample sizes");

    const int kk = panel0.k;
    const int reps = panel0.reps_per_submodel;
    const long dn = panel1.n - panel0.n;

    LogitLineField field;
    field.basis = LogitLineField::Basis::TwoPoint;
    field.k = kk;
    field.reps_per_submodel = reps;
    field.num_submodels = panel0.num_submodels;
    field.n_anchor0 = panel0.n;
    field.n_anchor1 = panel1.n;
    field.submodel_index = panel1.submodel_index;
    field.truth = panel1.truth;
    const size_t cells = static_cast<size_t>(panel0.rows()) * kk;
    field.slope.resize(cells);
    field.intercept.resize(cells);
    field.pairing.resize(cells);

    std::vector<double> sorted0(reps);
    std::vector<long> order1(reps);
    for (int sub = 0; sub < panel0.num_submodels; ++sub) {
        const long base = static_cast<long>(sub) * reps;
        for (int k = 0; k < kk; ++k) {
            for (int d = 0; d < reps; ++d) sorted0[d] = panel0.logit_at(base + d, k);
            std::sort(sorted0.begin(), sorted0.end());
            std::iota(order1.begin(), order1.end(), base);
            std::stable_sort(order1.begin(), order1.end(), [&](long a, long b) {
                return panel1.logit_at(a, k) < panel1.logit_at(b, k);
            });
            for (int d = 0; d < reps; ++d) {
                const long r = order1[d];
                const double l0 = sorted0[d];
                const double l1 = panel1.logit_at(r, k);
                const double slope = (l1 - l0) / static_cast<double>(dn);
                const size_t cell = static_cast<size_t>(r) * kk + k;
                field.slope[cell] = slope;
                field.intercept[cell] = l1 - slope * static_cast<double>(panel1.n);
                field.pairing[static_cast<size_t>(base + d) * kk + k] = r;
            }
        }
    }
    return field;
}

namespace {

struct ProbeOutcome {
    bool ok = false;
    GammaOptResult opt;
};

ProbeOutcome probe(const LogitLineField& field, const ThresholdScheme& scheme, double q,
                   double beta, long n, std::vector<TraceRow>* trace) {
    const ProbPanel panel = evaluate_at(field, n);
    ProbeOutcome out;
    out.opt = optimize_gamma(panel, q, scheme);
    out.ok = out.opt.feasible && out.opt.estimates.power_hat >= 1.0 - beta;
    if (trace) {
        TraceRow row;
        row.stage = "probe";
        row.basis =
            field.basis == LogitLineField::Basis::LimitSlope ? "limit-slope" : "two-point";
        row.n = n;
        row.feasible = out.opt.feasible;
        row.fdr_hat = out.opt.estimates.fdr_hat;
        row.power_hat = out.opt.estimates.power_hat;
        row.gamma = out.opt.gamma.gamma;
        trace->push_back(row);
    }
    return out;
}

}  // namespace

PowerSearchResult smallest_power_n(const LogitLineField& field, const ThresholdScheme& scheme,
                                   double q, double beta, long n_lo, long n_hi,
                                   std::vector<TraceRow>* trace, long n_hint) {
    if (!(n_lo < n_hi)) throw ValidationError("smallest_power_n: n_lo < n_hi required");
    n_lo = std::max<long>(2, n_lo);

    auto finish = [&](long n, const GammaOptResult& opt) {
        PowerSearchResult res;
        res.n = n;
        res.gamma = opt.gamma;
        res.estimates = opt.estimates;
        return res;
    };

    ProbeOutcome at_lo = probe(field, scheme, q, beta, n_lo, trace);
    if (at_lo.ok) return finish(n_lo, at_lo.opt);

    auto bisect_and_scan = [&](long lo, long hi, GammaOptResult hi_opt) {
        // bisection on the power criterion; thresholds re-optimize per probe
        while (hi - lo > 1) {
            const long mid = lo + (hi - lo) / 2;
            ProbeOutcome at_mid = probe(field, scheme, q, beta, mid, trace);
            if (at_mid.ok) {
                hi = mid;
                hi_opt = at_mid.opt;
            } else {
                lo = mid;
            }
        }
        // estimated power need not be monotone in n: certify local
        // minimality with a bounded downward scan
        for (int step = 0; step < 64 && hi - 1 > n_lo; ++step) {
            ProbeOutcome below = probe(field, scheme, q, beta, hi - 1, trace);
            if (!below.ok) break;
            hi = hi - 1;
            hi_opt = below.opt;
        }
        return finish(hi, hi_opt);
    };

    // The criteria hold on a window: below it power is short, far above it
    // rank-noise in fitted slopes can blow up false-metric logits until the
    // FDR bound fails again. Geometric scans with a modest factor (plus the
    // caller's hint, usually an anchor near the crossing) keep probes from
    // stepping over the window.
    ProbeOutcome last;
    auto forward_scan = [&](long start) -> std::optional<PowerSearchResult> {
        long cur = start;
        while (cur < n_hi) {
            const long next =
                std::min(n_hi, std::max(cur + 1, static_cast<long>(std::llround(1.4 * cur))));
            last = probe(field, scheme, q, beta, next, trace);
            if (last.ok) return bisect_and_scan(cur, next, last.opt);
            cur = next;
        }
        return std::nullopt;
    };

    if (n_hint > n_lo && n_hint < n_hi) {
        ProbeOutcome at_hint = probe(field, scheme, q, beta, n_hint, trace);
        if (at_hint.ok) {
            // refine downward toward the window's lower edge
            long hi = n_hint;
            GammaOptResult hi_opt = at_hint.opt;
            long lo = n_lo;
            long cur = n_hint;
            for (;;) {
                long next = static_cast<long>(std::llround(cur / 1.4));
                if (next >= cur) next = cur - 1;
                if (next <= n_lo) break;  // P(n_lo) already known false
                ProbeOutcome pr = probe(field, scheme, q, beta, next, trace);
                if (pr.ok) {
                    hi = next;
                    hi_opt = pr.opt;
                    cur = next;
                } else {
                    lo = next;
                    break;
                }
            }
            return bisect_and_scan(lo, hi, hi_opt);
        }
        if (auto res = forward_scan(n_hint)) return *res;
    }
    if (auto res = forward_scan(n_lo)) return *res;
    throw RangeExhaustedError("smallest_power_n: criteria unmet on [" + std::to_string(n_lo) +
                                  ", " + std::to_string(n_hi) + "]",
                              n_lo, n_hi, last.opt.estimates.power_hat, last.opt.feasible);
}

void DesignSettings::validate() const {
    if (!(q > 0.0 && q < 1.0)) throw ValidationError("design: q must lie in (0,1)");
    if (!(beta > 0.0 && beta < 1.0)) throw ValidationError("design: beta must lie in (0,1)");
    if (n0 < 2) throw ValidationError("design: n0 >= 2 required");
    if (!(c > 0.0)) throw ValidationError("design: c must be > 0");
    if (reps_per_submodel < 1) throw ValidationError("design: reps_per_submodel >= 1 required");
    if (max_n <= n0) throw ValidationError("design: max_n must exceed n0");
}

namespace {

PowerSearchResult search_with_widening(const LogitLineField& field,
                                       const DesignSettings& settings,
                                       std::vector<TraceRow>* trace, long n_hint) {
    long n_lo = std::max<long>(4, static_cast<long>(std::llround(0.1 * settings.n0)));
    long n_hi = std::min<long>(settings.max_n, 100 * settings.n0);
    for (;;) {
        try {
            return smallest_power_n(field, settings.scheme, settings.q, settings.beta, n_lo,
                                    n_hi, trace, n_hint);
        } catch (const RangeExhaustedError&) {
            if (n_hi >= settings.max_n) throw;
            n_hi = std::min(settings.max_n, n_hi * 2);
        }
    }
}

}  // namespace

DesignRecommendation run_design(const ModelFamily& family, const PsiMixture& psi,
                                const MetricPanel& panel, const PosteriorConfig& cfg,
                                const DesignSettings& settings) {
    settings.validate();
    const long passes_before = simulation_pass_count();
    DesignRecommendation rec;
    rec.n0 = settings.n0;

    const AllocationPlan plan0{settings.c, settings.n0};
    const ProbPanel panel0 = build_panel_for(family, psi, panel, plan0, cfg,
                                             settings.reps_per_submodel, settings.seed,
                                             kPassDesignN0, settings.workers);
    rec.trace.push_back({"sim", "panel", settings.n0, true, 0.0, 0.0, {}});

    const SlopeField slopes =
        slope_field(psi, panel, settings.c, settings.reps_per_submodel, family);
    const LogitLineField field0 = extrapolate_limit_slopes(panel0, slopes);

    const PowerSearchResult first =
        search_with_widening(field0, settings, &rec.trace, settings.n0);
    long n1 = first.n;
    // two-point slopes divide by n1 - n0: anchors that nearly coincide turn
    // rank noise into huge slopes, so keep at least a 10% separation (the
    // n1 == n0 case lands exactly on ceil(1.1 * n0))
    const long min_gap =
        std::max<long>(1, static_cast<long>(std::ceil(0.1 * static_cast<double>(settings.n0))));
    if (std::labs(n1 - settings.n0) < min_gap)
        n1 = (n1 >= settings.n0) ? settings.n0 + min_gap
                                 : std::max<long>(2, settings.n0 - min_gap);
    rec.n1 = n1;

    const AllocationPlan plan1{settings.c, n1};
    const ProbPanel panel1 = build_panel_for(family, psi, panel, plan1, cfg,
                                             settings.reps_per_submodel, settings.seed,
                                             kPassDesignN1, settings.workers);
    rec.trace.push_back({"sim", "panel", n1, true, 0.0, 0.0, {}});

    const LogitLineField field1 = refit_two_point(panel0, panel1);
    const PowerSearchResult second = search_with_widening(field1, settings, &rec.trace, n1);

    rec.n_total = second.n;
    const GroupSizes sizes = split_allocation({settings.c, second.n});
    rec.n_a = sizes.n_a;
    rec.n_b = sizes.n_b;
    rec.gamma = second.gamma;
    rec.estimates = second.estimates;
    rec.sim_passes = simulation_pass_count() - passes_before;
    rec.trace.push_back({"result", "two-point", second.n, true, second.estimates.fdr_hat,
                         second.estimates.power_hat, second.gamma.gamma});
    return rec;
}

std::string trace_to_csv(const std::vector<TraceRow>& trace, int k) {
    std::ostringstream out;
    out << "stage,basis,n,feasible,fdr_hat,power_hat";
    for (int i = 0; i < k; ++i) out << ",gamma_" << i;
    out << "\n";
    for (const auto& row : trace) {
        out << row.stage << ',' << row.basis << ',' << row.n << ',' << (row.feasible ? 1 : 0)
            << ',' << fmt17(row.fdr_hat) << ',' << fmt17(row.power_hat);
        for (int i = 0; i < k; ++i)
            out << ',' << (i < static_cast<int>(row.gamma.size()) ? fmt17(row.gamma[i]) : "");
        out << "\n";
    }
    return out.str();
}

}  // namespace abd
