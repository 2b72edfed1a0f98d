#include "abd/core.hpp"

#include <algorithm>
#include <cmath>

#include "abd/errors.hpp"

namespace abd {

void HypothesisSpec::validate() const {
    if (std::isnan(delta_lo) || std::isnan(delta_hi))
        throw ValidationError("hypothesis: endpoints must not be NaN");
    if (!(delta_lo < delta_hi))
        throw ValidationError("hypothesis: delta_lo < delta_hi required");
    if (delta_lo == -kInf && delta_hi == kInf)
        throw ValidationError("hypothesis: at least one endpoint must be finite");
}

void MetricPanel::validate() const {
    if (hypotheses.empty()) throw ValidationError("metric panel: K >= 1 required");
    for (const auto& h : hypotheses) h.validate();
}

void MultinomialGroupParams::validate() const {
    double sum = 0.0;
    for (int v = 0; v < kCells; ++v) {
        if (!(eta[v] >= 0.0))
            throw ValidationError("group params: eta[" + std::to_string(v + 1) + "] must be >= 0");
        sum += eta[v];
    }
    if (std::fabs(sum - 1.0) > 1e-12)
        throw ValidationError("group params: cell probabilities must sum to 1 within 1e-12");
}

const std::vector<int>& marginal_cells(int outcome) {
    // 0-based cell indices; cells 2..13 of the funnel diagram are 1..12 here
    static const std::vector<int> tables[kOutcomes] = {
        {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12},  // engaged: complement of cell 1
        {7, 8, 9, 10, 11, 12},                     // used the editor
        {4, 5, 6, 10, 11, 12},                     // visited pricing
        {2, 3, 5, 6, 8, 9, 11, 12},                // triggered the account dialog
        {3, 6, 9, 12},                             // created an account
    };
    return tables[outcome];
}

std::array<double, kOutcomes> marginals_from_eta(const MultinomialGroupParams& params) {
    params.validate();
    std::array<double, kOutcomes> pi{};
    pi[0] = 1.0 - params.eta[0];
    for (int k = 1; k < kOutcomes; ++k) {
        double s = 0.0;
        for (int cell : marginal_cells(k)) s += params.eta[cell];
        pi[k] = s;
    }
    for (auto& p : pi) p = std::clamp(p, 0.0, 1.0);
    return pi;
}

double lift(double pi_a, double pi_b) {
    if (!(pi_a > 0.0)) throw NumericError("lift: undefined for pi_a = 0");
    return (pi_b - pi_a) / pi_a;
}

void Submodel::validate() const {
    params_a.validate();
    params_b.validate();
    if (!(weight >= 0.0)) throw ValidationError("submodel: weight must be >= 0");
    if (!std::is_sorted(false_set.begin(), false_set.end()))
        throw ValidationError("submodel: false_set must be sorted");
    if (std::adjacent_find(false_set.begin(), false_set.end()) != false_set.end())
        throw ValidationError("submodel: false_set must not contain duplicates");
    for (int k : false_set)
        if (k < 0) throw ValidationError("submodel: false_set indices must be >= 0");
}

std::array<double, kOutcomes> submodel_theta(const Submodel& submodel) {
    const auto pi_a = marginals_from_eta(submodel.params_a);
    const auto pi_b = marginals_from_eta(submodel.params_b);
    std::array<double, kOutcomes> theta{};
    for (int k = 0; k < kOutcomes; ++k) theta[k] = lift(pi_a[k], pi_b[k]);
    return theta;
}

std::vector<char> truth_flags(const Submodel& submodel, const MetricPanel& panel) {
    submodel.validate();
    panel.validate();
    if (panel.k() > kOutcomes)
        throw ValidationError("truth_flags: panel has more metrics than the model family provides");
    const auto theta = submodel_theta(submodel);
    std::vector<char> flags(panel.k());
    for (int k = 0; k < panel.k(); ++k) {
        const auto& h = panel.hypotheses[k];
        double t = theta[k];
        if (h.delta_lo != -kInf && std::fabs(t - h.delta_lo) <= kBoundaryEps) t = h.delta_lo;
        if (h.delta_hi != kInf && std::fabs(t - h.delta_hi) <= kBoundaryEps) t = h.delta_hi;
        flags[k] = (t > h.delta_lo && t < h.delta_hi) ? 1 : 0;
        const bool in_false_set =
            std::binary_search(submodel.false_set.begin(), submodel.false_set.end(), k);
        if (flags[k] == static_cast<char>(in_false_set)) {
            throw ValidationError("truth_flags: submodel mislabeled at metric " +
                                  std::to_string(k + 1) + " (computed theta = " +
                                  std::to_string(theta[k]) + ")");
        }
    }
    return flags;
}

void PsiMixture::validate(const MetricPanel& panel, bool allow_trivial) const {
    if (submodels.empty()) throw ValidationError("psi mixture: submodel list must be nonempty");
    double wsum = 0.0;
    for (const auto& s : submodels) {
        s.validate();
        truth_flags(s, panel);
        wsum += s.weight;
        if (!allow_trivial) {
            if (s.false_set.empty())
                throw ValidationError("psi mixture: a submodel has no false hypotheses");
            if (static_cast<int>(s.false_set.size()) >= panel.k())
                throw ValidationError("psi mixture: a submodel has all hypotheses false");
        }
    }
    if (std::fabs(wsum - 1.0) > 1e-9)
        throw ValidationError("psi mixture: weights must sum to 1");
}

bool PsiMixture::equal_weights() const {
    if (submodels.empty()) return true;
    const double w0 = submodels.front().weight;
    for (const auto& s : submodels)
        if (std::fabs(s.weight - w0) > 1e-12) return false;
    return true;
}

void AllocationPlan::validate() const {
    if (!(c > 0.0)) throw ValidationError("allocation: c must be > 0");
    if (n < 2) throw ValidationError("allocation: n must be >= 2");
}

namespace {

long round_half_up(double x) { return static_cast<long>(std::floor(x + 0.5)); }

}  // namespace

GroupSizes split_allocation(const AllocationPlan& plan) {
    plan.validate();
    const double target_b = static_cast<double>(plan.n) / (1.0 + plan.c);
    const long base = static_cast<long>(std::floor(target_b));
    long best_b = -1;
    double best_dist = kInf;
    for (long nb = base - 1; nb <= base + 2; ++nb) {
        if (nb < 1 || nb > plan.n - 1) continue;
        const long na = plan.n - nb;
        if (round_half_up(plan.c * static_cast<double>(nb)) != na) continue;
        const double dist = std::fabs(static_cast<double>(nb) - target_b);
        if (dist < best_dist - 1e-12) {
            best_dist = dist;
            best_b = nb;
        }
    }
    if (best_b < 0) {
        // no split matches the rounding identity exactly; take n_B nearest to
        // n/(1+c), ties toward the smaller n_B (extra unit to group A)
        best_b = static_cast<long>(std::ceil(target_b - 0.5));
        best_b = std::clamp(best_b, 1L, plan.n - 1);
    }
    if (best_b < 1 || plan.n - best_b < 1)
        throw ValidationError("allocation: n too small to give both groups >= 1");
    return {plan.n - best_b, best_b};
}

}  // namespace abd
