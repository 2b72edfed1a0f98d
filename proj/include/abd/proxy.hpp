#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "abd/core.hpp"
#include "abd/model.hpp"
#include "abd/panel.hpp"

namespace abd {

/// Per-unit-n asymptotic variance of each lift estimate (diagonal of the
/// delta-method covariance).
struct AsymptoticVariance {
    std::vector<double> avar;
};

AsymptoticVariance asymptotic_variance(const Submodel& submodel, double c,
                                       const ModelFamily& family = multinomial_model());

/// (delta - theta_k) / sqrt(avar_k); infinite endpoints pass through.
double a_coefficient(double delta, double theta_k, double avar_k);

/// Limiting per-unit-n slope of the logit of the proxy posterior
/// probability: (0.5 - 1{theta outside}) * min(a_hi^2, a_lo^2), an infinite
/// endpoint contributing +inf to the min. Values within kBoundaryEps of a
/// finite endpoint count as on the boundary (slope 0).
double limiting_slope(double theta_k, double avar_k, const HypothesisSpec& hypothesis);

/// m x K matrix of limiting slopes, rows grouped by submodel like ProbPanel.
struct SlopeField {
    int k = 0;
    int reps_per_submodel = 0;
    std::vector<double> slopes;  // m x k

    double at(long r, int metric) const {
        return slopes[static_cast<size_t>(r) * k + metric];
    }
};

SlopeField slope_field(const PsiMixture& psi, const MetricPanel& panel, double c,
                       int reps_per_submodel, const ModelFamily& family = multinomial_model());

/// Lower Cholesky factor of a K x K covariance (row-major); throws
/// NumericError when the matrix is not positive definite.
std::vector<double> chol_lower(const std::vector<double>& cov, int k);

/// Sequential conditional-CDF inversion of N(mu, L L'): out = mu + L z with
/// z_k the u_k-quantile of the standard normal.
void mvn_from_uniforms(const double* mu, const double* chol, int k, const double* u, double* out);

/// Probabilities and logits of the proxy posterior for one repetition:
/// theta_hat = theta + (L z) / sqrt(n), then normal interval masses at the
/// hypothesis endpoints with marginal scale sqrt(cov_kk / n). Logits are
/// computed in log-space and stay finite for finite inputs.
void proxy_eval(const double* theta, const double* chol, const double* cov_diag, int k,
                const double* z, double n, const MetricPanel& panel, double* probs_out,
                double* logits_out);

/// Theory-only panel: no data are simulated; repetitions are conditional-CDF
/// inversions of the MLE sampling distribution with the full delta-method
/// covariance. m must be divisible by the number of submodels. Trivial
/// false-sets are permitted here (boundary studies need them).
ProbPanel proxy_panel(const PsiMixture& psi, const MetricPanel& panel,
                      const AllocationPlan& plan, long m, uint64_t seed,
                      const ModelFamily& family = multinomial_model(), int workers = 1);

/// Recovers the n-free offset b from one proxy logit observed at n_ref.
/// Requires a one-sided hypothesis (one infinite a); the finite side is
/// inverted in closed form.
double recover_b(double logit_p, double a_lo, double a_hi, double n_ref);

/// logit of Phi(a_hi sqrt(n) + b) - Phi(a_lo sqrt(n) + b).
double proxy_logit(double a_lo, double a_hi, double b, double n);

struct SlopeCheckRow {
    int submodel = 0;
    int metric = 0;
    double theory = 0.0;
    double numeric = 0.0;
    double rel_err = 0.0;
};

/// Theoretical limiting slopes against the [n_ref, 4 n_ref] secant of the
/// proxy logit at the central point u = 0.5 (b = 0), per submodel and metric.
std::vector<SlopeCheckRow> slope_check(const PsiMixture& psi, const MetricPanel& panel,
                                       double c, double n_ref,
                                       const ModelFamily& family = multinomial_model());
std::string slope_check_to_csv(const std::vector<SlopeCheckRow>& rows);

}  // namespace abd
