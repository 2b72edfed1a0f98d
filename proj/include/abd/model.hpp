#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "abd/core.hpp"
#include "abd/rng.hpp"

namespace abd {

/// Counts per multinomial cell (dependent family) or successes per outcome
/// (independent family), one vector per group.
struct DatasetCounts {
    std::vector<long> counts_a;
    std::vector<long> counts_b;
};

/// Posterior sampling controls shared by all model families.
struct PosteriorConfig {
    int draws = 4000;
    std::array<double, kCells> prior_alpha = [] {
        std::array<double, kCells> a{};
        a.fill(1.0);
        return a;
    }();
    /// 0 means "use the default 1/(2*draws)"; otherwise must lie in
    /// (0, 1/(2*draws)].
    double clip_eps = 0.0;
    /// Multiplier on the Silverman kernel bandwidth; 0 switches the
    /// probability estimator to the raw open-interval indicator.
    double bandwidth_scale = 1.0;

    void validate() const;
    double effective_clip() const { return clip_eps > 0.0 ? clip_eps : 0.5 / draws; }
};

/// A data-generating family: how to sample a dataset under a submodel, draw
/// posterior samples of the lift vector, and linearize the estimator.
class ModelFamily {
public:
    virtual ~ModelFamily() = default;
    virtual std::string name() const = 0;
    virtual int metric_count() const = 0;

    virtual DatasetCounts sample(const Submodel& submodel, const GroupSizes& sizes,
                                 StreamRng& rng) const = 0;

    /// Writes cfg.draws x K lift draws (row-major) from the joint posterior.
    /// Draws where a lift is undefined are rejected and redrawn; the count of
    /// rejections is accumulated into *rejects.
    virtual void posterior_theta(const DatasetCounts& data, const GroupSizes& sizes,
                                 const PosteriorConfig& cfg, StreamRng& rng, double* out,
                                 long* rejects) const = 0;

    virtual std::vector<double> theta(const Submodel& submodel) const = 0;

    /// K x K row-major covariance of the lift MLE per unit of total n
    /// (delta method, group fractions c/(1+c) and 1/(1+c)).
    virtual std::vector<double> mle_covariance(const Submodel& submodel, double c) const = 0;
};

/// Joint multinomial model over the 13 funnel cells; lifts of the five
/// marginal outcome probabilities, Dirichlet(prior_alpha) posterior per group.
class MultinomialLiftModel final : public ModelFamily {
public:
    std::string name() const override { return "multinomial"; }
    int metric_count() const override { return kOutcomes; }
    DatasetCounts sample(const Submodel&, const GroupSizes&, StreamRng&) const override;
    void posterior_theta(const DatasetCounts&, const GroupSizes&, const PosteriorConfig&,
                         StreamRng&, double*, long*) const override;
    std::vector<double> theta(const Submodel&) const override;
    std::vector<double> mle_covariance(const Submodel&, double c) const override;
};

/// Five independent binomial outcomes generated from the submodel's
/// marginals, analyzed with independent Beta(1,1) posteriors.
class IndependentBinomialLiftModel final : public ModelFamily {
public:
    std::string name() const override { return "independent-binomial"; }
    int metric_count() const override { return kOutcomes; }
    DatasetCounts sample(const Submodel&, const GroupSizes&, StreamRng&) const override;
    void posterior_theta(const DatasetCounts&, const GroupSizes&, const PosteriorConfig&,
                         StreamRng&, double*, long*) const override;
    std::vector<double> theta(const Submodel&) const override;
    std::vector<double> mle_covariance(const Submodel&, double c) const override;
};

const ModelFamily& multinomial_model();
const ModelFamily& independent_binomial_model();

}  // namespace abd
