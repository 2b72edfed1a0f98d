#include "abd/proxy.hpp"

#include <cmath>
#include <sstream>

#include "abd/csv.hpp"
#include "abd/errors.hpp"
#include "abd/parallel.hpp"
#include "abd/stats.hpp"

namespace abd {

AsymptoticVariance asymptotic_variance(const Submodel& submodel, double c,
                                       const ModelFamily& family) {
    const auto cov = family.mle_covariance(submodel, c);
    const int k = family.metric_count();
    AsymptoticVariance out;
    out.avar.resize(k);
    for (int i = 0; i < k; ++i) {
        out.avar[i] = cov[static_cast<size_t>(i) * k + i];
        if (!(out.avar[i] > 0.0))
            throw NumericError("asymptotic_variance: nonpositive variance for metric " +
                               std::to_string(i + 1));
    }
    return out;
}

double a_coefficient(double delta, double theta_k, double avar_k) {
    if (!(avar_k > 0.0)) throw ValidationError("a_coefficient: avar_k must be > 0");
    if (delta == kInf) return kInf;
    if (delta == -kInf) return -kInf;
    return (delta - theta_k) / std::sqrt(avar_k);
}

double limiting_slope(double theta_k, double avar_k, const HypothesisSpec& hypothesis) {
    if (hypothesis.delta_lo == -kInf && hypothesis.delta_hi == kInf)
        throw NumericError("limiting_slope: degenerate hypothesis with no finite endpoint");
    double t = theta_k;
    if (hypothesis.delta_lo != -kInf && std::fabs(t - hypothesis.delta_lo) <= kBoundaryEps)
        t = hypothesis.delta_lo;
    if (hypothesis.delta_hi != kInf && std::fabs(t - hypothesis.delta_hi) <= kBoundaryEps)
        t = hypothesis.delta_hi;
    double min_a2 = kInf;
    if (hypothesis.delta_lo != -kInf) {
        const double a = a_coefficient(hypothesis.delta_lo, t, avar_k);
        min_a2 = std::min(min_a2, a * a);
    }
    if (hypothesis.delta_hi != kInf) {
        const double a = a_coefficient(hypothesis.delta_hi, t, avar_k);
        min_a2 = std::min(min_a2, a * a);
    }
    const bool outside = !(t > hypothesis.delta_lo && t < hypothesis.delta_hi);
    return (0.5 - (outside ? 1.0 : 0.0)) * min_a2;
}

SlopeField slope_field(const PsiMixture& psi, const MetricPanel& panel, double c,
                       int reps_per_submodel, const ModelFamily& family) {
    if (reps_per_submodel < 1)
        throw ValidationError("slope_field: reps_per_submodel >= 1 required");
    const int kk = panel.k();
    if (kk != family.metric_count())
        throw ValidationError("slope_field: panel size does not match the model family");
    SlopeField field;
    field.k = kk;
    field.reps_per_submodel = reps_per_submodel;
    const long m = static_cast<long>(psi.size()) * reps_per_submodel;
    field.slopes.resize(static_cast<size_t>(m) * kk);
    for (int sub = 0; sub < psi.size(); ++sub) {
        const auto theta = family.theta(psi.submodels[sub]);
        const auto avar = asymptotic_variance(psi.submodels[sub], c, family);
        std::vector<double> row(kk);
        for (int k = 0; k < kk; ++k)
            row[k] = limiting_slope(theta[k], avar.avar[k], panel.hypotheses[k]);
        for (int rep = 0; rep < reps_per_submodel; ++rep) {
            const size_t base =
                (static_cast<size_t>(sub) * reps_per_submodel + rep) * kk;
            for (int k = 0; k < kk; ++k) field.slopes[base + k] = row[k];
        }
    }
    return field;
}

std::vector<double> chol_lower(const std::vector<double>& cov, int k) {
    if (static_cast<int>(cov.size()) != k * k)
        throw ValidationError("chol_lower: matrix size mismatch");
    std::vector<double> l(static_cast<size_t>(k) * k, 0.0);
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j <= i; ++j) {
            double sum = cov[static_cast<size_t>(i) * k + j];
            for (int p = 0; p < j; ++p)
                sum -= l[static_cast<size_t>(i) * k + p] * l[static_cast<size_t>(j) * k + p];
            if (i == j) {
                if (!(sum > 0.0))
                    throw NumericError("chol_lower: covariance is not positive definite");
                l[static_cast<size_t>(i) * k + j] = std::sqrt(sum);
            } else {
                l[static_cast<size_t>(i) * k + j] = sum / l[static_cast<size_t>(j) * k + j];
            }
        }
    }
    return l;
}

void mvn_from_uniforms(const double* mu, const double* chol, int k, const double* u,
                       double* out) {
    for (int i = 0; i < k; ++i) {
        double acc = mu[i];
        const double z_i = norm_quantile(u[i]);
        for (int j = 0; j < i; ++j)
            acc += chol[static_cast<size_t>(i) * k + j] * norm_quantile(u[j]);
        acc += chol[static_cast<size_t>(i) * k + i] * z_i;
        out[i] = acc;
    }
}

void proxy_eval(const double* theta, const double* chol, const double* cov_diag, int k,
                const double* z, double n, const MetricPanel& panel, double* probs_out,
                double* logits_out) {
    const double sqrt_n = std::sqrt(n);
    for (int i = 0; i < k; ++i) {
        double shift = 0.0;
        for (int j = 0; j <= i; ++j) shift += chol[static_cast<size_t>(i) * k + j] * z[j];
        const double theta_hat = theta[i] + shift / sqrt_n;
        const double se = std::sqrt(cov_diag[i]) / sqrt_n;
        const auto& h = panel.hypotheses[i];
        const double x_lo = (h.delta_lo == -kInf) ? -kInf : (h.delta_lo - theta_hat) / se;
        const double x_hi = (h.delta_hi == kInf) ? kInf : (h.delta_hi - theta_hat) / se;
        const double l = logit_interval_prob(x_lo, x_hi);
        logits_out[i] = l;
        probs_out[i] = expit(l);
    }
}

namespace {

// truth flags without mixture-level validation; the proxy tooling accepts
// boundary-only and degenerate scenarios
std::vector<char> truth_flags_raw(const Submodel& submodel, const MetricPanel& panel) {
    const auto theta = submodel_theta(submodel);
    std::vector<char> flags(panel.k());
    for (int k = 0; k < panel.k(); ++k) {
        const auto& h = panel.hypotheses[k];
        double t = theta[k];
        if (h.delta_lo != -kInf && std::fabs(t - h.delta_lo) <= kBoundaryEps) t = h.delta_lo;
        if (h.delta_hi != kInf && std::fabs(t - h.delta_hi) <= kBoundaryEps) t = h.delta_hi;
        flags[k] = (t > h.delta_lo && t < h.delta_hi) ? 1 : 0;
    }
    return flags;
}

}  // namespace

ProbPanel proxy_panel(const PsiMixture& psi, const MetricPanel& panel,
                      const AllocationPlan& plan, long m, uint64_t seed,
                      const ModelFamily& family, int workers) {
    plan.validate();
    if (psi.submodels.empty()) throw ValidationError("proxy_panel: empty mixture");
    const int num_sub = psi.size();
    if (m < num_sub || m % num_sub != 0)
        throw ValidationError("proxy_panel: m must be a positive multiple of the submodel count");
    const int kk = panel.k();
    if (kk != family.metric_count())
        throw ValidationError("proxy_panel: panel size does not match the model family");
    const long reps = m / num_sub;

    struct SubCtx {
        std::vector<double> theta;
        std::vector<double> chol;
        std::vector<double> diag;
        std::vector<char> truth;
    };
    std::vector<SubCtx> ctx(num_sub);
    for (int sub = 0; sub < num_sub; ++sub) {
        const auto& s = psi.submodels[sub];
        ctx[sub].theta = family.theta(s);
        auto cov = family.mle_covariance(s, plan.c);
        try {
            ctx[sub].chol = chol_lower(cov, kk);
        } catch (const NumericError&) {
            throw NumericError("proxy_panel: covariance not positive definite for submodel " +
                               std::to_string(sub));
        }
        ctx[sub].diag.resize(kk);
        for (int k = 0; k < kk; ++k) ctx[sub].diag[k] = cov[static_cast<size_t>(k) * kk + k];
        ctx[sub].truth = truth_flags_raw(s, panel);
    }

    ProbPanel out;
    out.k = kk;
    out.n = plan.n;
    out.reps_per_submodel = static_cast<int>(reps);
    out.num_submodels = num_sub;
    out.probs.resize(static_cast<size_t>(m) * kk);
    out.logits.resize(static_cast<size_t>(m) * kk);
    out.submodel_index.resize(m);
    out.truth.resize(static_cast<size_t>(m) * kk);
    out.seed_record.seed = seed;
    out.seed_record.pass = 0;
    out.seed_record.source = "proxy:" + family.name();

    parallel_for(m, workers, [&](int64_t r) {
        const int sub = static_cast<int>(r / reps);
        const uint64_t rep = static_cast<uint64_t>(r % reps);
        StreamRng rng(seed, make_stream(static_cast<uint32_t>(Phase::Proxy), 0,
                                        static_cast<uint32_t>(sub), rep));
        std::vector<double> z(kk);
        for (int k = 0; k < kk; ++k) z[k] = norm_quantile(rng.open01());
        std::vector<double> probs(kk), logits(kk);
        proxy_eval(ctx[sub].theta.data(), ctx[sub].chol.data(), ctx[sub].diag.data(), kk,
                   z.data(), static_cast<double>(plan.n), panel, probs.data(), logits.data());
        out.submodel_index[r] = sub;
        for (int k = 0; k < kk; ++k) {
            const size_t cell = static_cast<size_t>(r) * kk + k;
            out.probs[cell] = probs[k];
            out.logits[cell] = logits[k];
            out.truth[cell] = ctx[sub].truth[k];
        }
    });
    return out;
}

double proxy_logit(double a_lo, double a_hi, double b, double n) {
    const double sqrt_n = std::sqrt(n);
    const double x_lo = (a_lo == -kInf) ? -kInf : a_lo * sqrt_n + b;
    const double x_hi = (a_hi == kInf) ? kInf : a_hi * sqrt_n + b;
    return logit_interval_prob(x_lo, x_hi);
}

double recover_b(double logit_p, double a_lo, double a_hi, double n_ref) {
    const double sqrt_n = std::sqrt(n_ref);
    if (a_lo == -kInf && a_hi == kInf)
        throw NumericError("recover_b: degenerate hypothesis");
    if (a_hi == kInf) {
        // p = 1 - Phi(a_lo sqrt(n) + b)
        return norm_quantile(expit(-logit_p)) - a_lo * sqrt_n;
    }
    if (a_lo == -kInf) {
        // p = Phi(a_hi sqrt(n) + b)
        return norm_quantile(expit(logit_p)) - a_hi * sqrt_n;
    }
    throw NumericError("recover_b: two finite endpoints are not supported");
}

std::vector<SlopeCheckRow> slope_check(const PsiMixture& psi, const MetricPanel& panel,
                                       double c, double n_ref, const ModelFamily& family) {
    std::vector<SlopeCheckRow> rows;
    const int kk = panel.k();
    for (int sub = 0; sub < psi.size(); ++sub) {
        const auto theta = family.theta(psi.submodels[sub]);
        const auto avar = asymptotic_variance(psi.submodels[sub], c, family);
        for (int k = 0; k < kk; ++k) {
            SlopeCheckRow row;
            row.submodel = sub;
            row.metric = k;
            row.theory = limiting_slope(theta[k], avar.avar[k], panel.hypotheses[k]);
            const auto& h = panel.hypotheses[k];
            const double a_lo = (h.delta_lo == -kInf)
                                    ? -kInf
                                    : a_coefficient(h.delta_lo, theta[k], avar.avar[k]);
            const double a_hi = (h.delta_hi == kInf)
                                    ? kInf
                                    : a_coefficient(h.delta_hi, theta[k], avar.avar[k]);
            const double l1 = proxy_logit(a_lo, a_hi, 0.0, n_ref);
            const double l4 = proxy_logit(a_lo, a_hi, 0.0, 4.0 * n_ref);
            row.numeric = (l4 - l1) / (3.0 * n_ref);
            row.rel_err = (row.theory != 0.0)
                              ? std::fabs(row.numeric - row.theory) / std::fabs(row.theory)
                              : std::fabs(row.numeric);
            rows.push_back(row);
        }
    }
    return rows;
}

std::string slope_check_to_csv(const std::vector<SlopeCheckRow>& rows) {
    std::ostringstream out;
    out << "submodel,k,theory_slope,numeric_slope,rel_err\n";
    for (const auto& r : rows) {
        out << r.submodel << ',' << r.metric << ',' << fmt17(r.theory) << ','
            << fmt17(r.numeric) << ',' << fmt17(r.rel_err) << "\n";
    }
    return out.str();
}

}  // namespace abd
