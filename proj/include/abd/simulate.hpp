#pragma once

#include <cstdint>

#include "abd/core.hpp"
#include "abd/model.hpp"
#include "abd/panel.hpp"

namespace abd {

/// Distinguishes the independent simulation passes of a workflow; enters
/// every RNG stream id so panels at different passes are independent.
enum SimPass : uint32_t {
    kPassDesignN0 = 0,
    kPassDesignN1 = 1,
    kPassVerify = 2,
    kPassBaseline = 8,  // +probe index
};

/// Draws one dataset under the submodel for the dependent multinomial family.
DatasetCounts sample_dataset(const Submodel& submodel, const AllocationPlan& plan,
                             StreamRng& rng);

/// Estimated Pr(theta_k in (delta_lo, delta_hi) | data) for each metric:
/// empirical fraction of posterior draws smoothed with a Gaussian kernel CDF
/// at the endpoints (Silverman bandwidth), clipped into
/// [clip_eps, 1 - clip_eps]. rejected (when non-null) accumulates redraws.
std::vector<double> posterior_prob(const DatasetCounts& data, const MetricPanel& panel,
                                   const PosteriorConfig& cfg, StreamRng& rng,
                                   const GroupSizes& sizes, const ModelFamily& family,
                                   long* rejected = nullptr);

/// Simulates reps_per_submodel datasets per submodel at plan.n and estimates
/// the joint sampling distribution of posterior probabilities. Deterministic
/// in (inputs, seed) for any worker count.
ProbPanel build_panel(const PsiMixture& psi, const MetricPanel& panel,
                      const AllocationPlan& plan, const PosteriorConfig& cfg,
                      int reps_per_submodel, uint64_t seed, uint32_t pass = kPassDesignN0,
                      int workers = 1);

/// Same layout, but outcomes generated as independent binomials from each
/// submodel's marginals and analyzed with independent Beta(1,1) posteriors.
ProbPanel build_panel_independent(const PsiMixture& psi, const MetricPanel& panel,
                                  const AllocationPlan& plan, const PosteriorConfig& cfg,
                                  int reps_per_submodel, uint64_t seed,
                                  uint32_t pass = kPassDesignN0, int workers = 1);

/// Generic entry used by both wrappers above.
ProbPanel build_panel_for(const ModelFamily& family, const PsiMixture& psi,
                          const MetricPanel& panel, const AllocationPlan& plan,
                          const PosteriorConfig& cfg, int reps_per_submodel, uint64_t seed,
                          uint32_t pass, int workers);

/// Number of simulated panels built since process start (instrumentation for
/// the two-simulation contract of the design search).
long simulation_pass_count();

}  // namespace abd
