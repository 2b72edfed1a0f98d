#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "abd/stats.hpp"

namespace abd {

constexpr int kCells = 13;    // multinomial cells of the engagement funnel
constexpr int kOutcomes = 5;  // binary outcomes with marginals pi_1..pi_5

/// One interval hypothesis: theta in (delta_lo, delta_hi). Endpoints are
/// extended reals; +/-inf encodes a one-sided test.
struct HypothesisSpec {
    double delta_lo = 0.0;
    double delta_hi = kInf;

    void validate() const;
    bool one_sided() const { return delta_lo == -kInf || delta_hi == kInf; }
};

/// Ordered metric panel; the ordering indexes every downstream matrix.
struct MetricPanel {
    std::vector<HypothesisSpec> hypotheses;

    int k() const { return static_cast<int>(hypotheses.size()); }
    void validate() const;
};

/// Cell probabilities eta_1..eta_13 for one treatment group.
struct MultinomialGroupParams {
    std::array<double, kCells> eta{};

    void validate() const;
};

/// Marginal outcome probabilities (pi_1..pi_5) implied by the cell layout.
std::array<double, kOutcomes> marginals_from_eta(const MultinomialGroupParams& params);

/// Cell membership of each marginal; index 0 is the engagement complement
/// and is handled separately (pi_1 = 1 - eta_1).
const std::vector<int>& marginal_cells(int outcome);

/// Relative difference (pi_b - pi_a) / pi_a. pi_a must be positive.
double lift(double pi_a, double pi_b);

/// One data-generation scenario: group parameters plus the set of false
/// hypotheses Lambda.
struct Submodel {
    MultinomialGroupParams params_a;
    MultinomialGroupParams params_b;
    std::vector<int> false_set;  // sorted 0-based metric indices
    double weight = 1.0;

    void validate() const;
};

/// Lifts theta_k implied by the group parameters, one per outcome.
std::array<double, kOutcomes> submodel_theta(const Submodel& submodel);

/// Near-boundary snap width used when classifying computed lifts against
/// interval endpoints; constructed scenarios place theta exactly on a
/// boundary up to solver roundoff.
constexpr double kBoundaryEps = 1e-9;

/// flag_k = true iff theta_k lies inside the open interval of hypothesis k,
/// with values within kBoundaryEps of a finite endpoint treated as on the
/// boundary (hence false). Throws if the flags contradict submodel.false_set.
std::vector<char> truth_flags(const Submodel& submodel, const MetricPanel& panel);

/// Weighted collection of submodels defining the data-generation model.
struct PsiMixture {
    std::vector<Submodel> submodels;

    int size() const { return static_cast<int>(submodels.size()); }
    /// allow_trivial permits scenarios where all or none of the hypotheses
    /// are false; mixtures for design runs should keep it off.
    void validate(const MetricPanel& panel, bool allow_trivial = false) const;
    bool equal_weights() const;
};

/// Total sample size n split across groups with allocation ratio c = n_A/n_B.
struct AllocationPlan {
    double c = 1.0;
    long n = 0;

    void validate() const;
};

struct GroupSizes {
    long n_a = 0;
    long n_b = 0;
};

/// Splits n so that n_A is the half-up rounding of c * n_B where such a split
/// exists; ties on n_B go to the smaller value (extra unit to group A).
GroupSizes split_allocation(const AllocationPlan& plan);

}  // namespace abd
