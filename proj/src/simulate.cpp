#include "abd/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <vector>

#include "abd/errors.hpp"
#include "abd/parallel.hpp"
#include "abd/stats.hpp"

namespace abd {

namespace {

std::atomic<long> g_sim_passes{0};

// type-7 quantile on a scratch copy
double quantile(std::vector<double>& scratch, double p) {
    const size_t n = scratch.size();
    const double h = p * static_cast<double>(n - 1);
    const size_t lo = static_cast<size_t>(h);
    std::nth_element(scratch.begin(), scratch.begin() + lo, scratch.end());
    const double v_lo = scratch[lo];
    if (lo + 1 >= n || h == static_cast<double>(lo)) return v_lo;
    std::nth_element(scratch.begin() + lo + 1, scratch.begin() + lo + 1, scratch.end());
    const double v_hi = scratch[lo + 1];
    return v_lo + (h - static_cast<double>(lo)) * (v_hi - v_lo);
}

// kernel-CDF estimate of Pr(theta in (lo, hi)) from draws of one metric
double kernel_interval_estimate(const double* theta, int stride, int draws,
                                const HypothesisSpec& h, double bandwidth_scale) {
    double mean = 0.0;
    for (int s = 0; s < draws; ++s) mean += theta[static_cast<size_t>(s) * stride];
    mean /= draws;
    double var = 0.0;
    for (int s = 0; s < draws; ++s) {
        const double d = theta[static_cast<size_t>(s) * stride] - mean;
        var += d * d;
    }
    var /= (draws > 1) ? (draws - 1) : 1;
    const double sd = std::sqrt(var);

    static thread_local std::vector<double> scratch;
    scratch.resize(draws);
    for (int s = 0; s < draws; ++s) scratch[s] = theta[static_cast<size_t>(s) * stride];
    const double q75 = quantile(scratch, 0.75);
    const double q25 = quantile(scratch, 0.25);
    const double iqr = q75 - q25;

    double sigma = sd;
    if (iqr > 0.0) sigma = std::min(sd, iqr / 1.34);
    const double bw =
        0.9 * sigma * std::pow(static_cast<double>(draws), -0.2) * bandwidth_scale;

    double acc = 0.0;
    if (bw > 0.0) {
        for (int s = 0; s < draws; ++s) {
            const double t = theta[static_cast<size_t>(s) * stride];
            const double upper = (h.delta_hi == kInf) ? 1.0 : norm_cdf((h.delta_hi - t) / bw);
            const double lower = (h.delta_lo == -kInf) ? 0.0 : norm_cdf((h.delta_lo - t) / bw);
            acc += upper - lower;
        }
    } else {
        // degenerate draws: fall back to the open-interval indicator
        for (int s = 0; s < draws; ++s) {
            const double t = theta[static_cast<size_t>(s) * stride];
            acc += (t > h.delta_lo && t < h.delta_hi) ? 1.0 : 0.0;
        }
    }
    return acc / draws;
}

}  // namespace

DatasetCounts sample_dataset(const Submodel& submodel, const AllocationPlan& plan,
                             StreamRng& rng) {
    submodel.validate();
    const GroupSizes sizes = split_allocation(plan);
    return multinomial_model().sample(submodel, sizes, rng);
}

std::vector<double> posterior_prob(const DatasetCounts& data, const MetricPanel& panel,
                                   const PosteriorConfig& cfg, StreamRng& rng,
                                   const GroupSizes& sizes, const ModelFamily& family,
                                   long* rejected) {
    cfg.validate();
    if (panel.k() != family.metric_count())
        throw ValidationError("posterior_prob: panel size does not match the model family");
    static thread_local std::vector<double> draws;
    draws.resize(static_cast<size_t>(cfg.draws) * family.metric_count());
    long rej = 0;
    family.posterior_theta(data, sizes, cfg, rng, draws.data(), &rej);
    if (rejected) *rejected += rej;

    const double clip = cfg.effective_clip();
    std::vector<double> probs(panel.k());
    for (int k = 0; k < panel.k(); ++k) {
        double p = kernel_interval_estimate(draws.data() + k, panel.k(), cfg.draws,
                                            panel.hypotheses[k], cfg.bandwidth_scale);
        probs[k] = std::clamp(p, clip, 1.0 - clip);
    }
    return probs;
}

ProbPanel build_panel_for(const ModelFamily& family, const PsiMixture& psi,
                          const MetricPanel& panel, const AllocationPlan& plan,
                          const PosteriorConfig& cfg, int reps_per_submodel, uint64_t seed,
                          uint32_t pass, int workers) {
    psi.validate(panel);
    plan.validate();
    cfg.validate();
    if (reps_per_submodel < 1)
        throw ValidationError("build_panel: reps_per_submodel >= 1 required");
    if (panel.k() != family.metric_count())
        throw ValidationError("build_panel: panel size does not match the model family");
    if (!psi.equal_weights())
        throw ValidationError(
            "build_panel: repetitions are allocated uniformly; submodel weights must be equal");

    const GroupSizes sizes = split_allocation(plan);
    const int num_sub = psi.size();
    const long m = static_cast<long>(num_sub) * reps_per_submodel;
    const int kk = panel.k();

    ProbPanel out;
    out.k = kk;
    out.n = plan.n;
    out.reps_per_submodel = reps_per_submodel;
    out.num_submodels = num_sub;
    out.probs.resize(static_cast<size_t>(m) * kk);
    out.logits.resize(static_cast<size_t>(m) * kk);
    out.submodel_index.resize(m);
    out.truth.resize(static_cast<size_t>(m) * kk);
    out.seed_record.seed = seed;
    out.seed_record.pass = pass;
    out.seed_record.source = family.name();

    std::vector<std::vector<char>> truth_by_sub(num_sub);
    for (int s = 0; s < num_sub; ++s) truth_by_sub[s] = truth_flags(psi.submodels[s], panel);

    std::atomic<long> total_rejects{0};
    std::atomic<bool> reject_warning{false};
    const long warn_at = std::max(1L, static_cast<long>(0.01 * cfg.draws));

    parallel_for(m, workers, [&](int64_t r) {
        const int sub = static_cast<int>(r / reps_per_submodel);
        const uint64_t rep = static_cast<uint64_t>(r % reps_per_submodel);
        StreamRng rng_data(seed, make_stream(static_cast<uint32_t>(Phase::Dataset), pass,
                                             static_cast<uint32_t>(sub), rep));
        const DatasetCounts data = family.sample(psi.submodels[sub], sizes, rng_data);
        StreamRng rng_post(seed, make_stream(static_cast<uint32_t>(Phase::Posterior), pass,
                                             static_cast<uint32_t>(sub), rep));
        long rejects = 0;
        const auto probs = posterior_prob(data, panel, cfg, rng_post, sizes, family, &rejects);
        if (rejects > 0) {
            total_rejects.fetch_add(rejects);
            if (rejects > warn_at) reject_warning.store(true);
        }
        out.submodel_index[r] = sub;
        for (int k = 0; k < kk; ++k) {
            const size_t cell = static_cast<size_t>(r) * kk + k;
            out.probs[cell] = probs[k];
            out.logits[cell] = logit(probs[k]);
            out.truth[cell] = truth_by_sub[sub][k];
        }
    });

    out.seed_record.rejected_draws = total_rejects.load();
    out.seed_record.reject_warning = reject_warning.load();
    g_sim_passes.fetch_add(1);
    return out;
}

ProbPanel build_panel(const PsiMixture& psi, const MetricPanel& panel,
                      const AllocationPlan& plan, const PosteriorConfig& cfg,
                      int reps_per_submodel, uint64_t seed, uint32_t pass, int workers) {
    return build_panel_for(multinomial_model(), psi, panel, plan, cfg, reps_per_submodel, seed,
                           pass, workers);
}

ProbPanel build_panel_independent(const PsiMixture& psi, const MetricPanel& panel,
                                  const AllocationPlan& plan, const PosteriorConfig& cfg,
                                  int reps_per_submodel, uint64_t seed, uint32_t pass,
                                  int workers) {
    return build_panel_for(independent_binomial_model(), psi, panel, plan, cfg,
                           reps_per_submodel, seed, pass, workers);
}

long simulation_pass_count() { return g_sim_passes.load(); }

}  // namespace abd
