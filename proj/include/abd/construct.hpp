#pragma once

#include <array>
#include <string>
#include <vector>

#include "abd/core.hpp"
#include "abd/lp.hpp"

namespace abd {

/// Targets for one scenario: group-A marginals, per-metric lift targets, and
/// the set of hypotheses the targets render false.
struct SubmodelTarget {
    std::array<double, kOutcomes> marginals_a{};
    std::array<double, kOutcomes> lift_targets{};
    std::vector<int> false_set;  // sorted 0-based
    double weight = 1.0;
};

/// Objective used to pick among the cell assignments matching a marginal
/// target. MaxMinCell avoids structurally avoidable zero cells, which would
/// make rarely-hit cells uninformative under the Dirichlet update.
enum class GroupObjective { MaxMinCell, AnyFeasible };

/// Builds 13 cell probabilities matching the given marginals. Among feasible
/// cell assignments, optimizes the configured objective (by default the
/// smallest probability of any cell not structurally pinned to zero).
MultinomialGroupParams construct_group(const std::array<double, kOutcomes>& marginals,
                                       GroupObjective objective = GroupObjective::MaxMinCell);

/// Group A from marginals_a, group B from the lifted marginals; verifies the
/// resulting lifts classify exactly as target.false_set under the panel.
Submodel construct_submodel(const SubmodelTarget& target, const MetricPanel& panel,
                            GroupObjective objective = GroupObjective::MaxMinCell);

/// All scenarios whose false-set size is listed in sizes (0-based metrics,
/// subsets ordered by size then lexicographically), equal weights. The false
/// metrics get lift 0, the rest get `effect`.
PsiMixture build_psi_subsets(const std::array<double, kOutcomes>& marginals_a, double effect,
                             const MetricPanel& panel, const std::vector<int>& sizes,
                             GroupObjective objective = GroupObjective::MaxMinCell);

/// The full 30-scenario mixture: every nonempty proper subset of the five
/// hypotheses marked false.
PsiMixture build_psi_30(const std::array<double, kOutcomes>& marginals_a, double effect,
                        const MetricPanel& panel,
                        GroupObjective objective = GroupObjective::MaxMinCell);

/// Canonical text serialization of a mixture (comma-separated, header row,
/// 17-significant-digit values, LF endings). Deterministic byte-for-byte.
std::string serialize_mixture(const PsiMixture& psi);
PsiMixture parse_mixture(const std::string& text);

}  // namespace abd
