#include "abd/model.hpp"

#include <cmath>

#include "abd/errors.hpp"

namespace abd {

void PosteriorConfig::validate() const {
    if (draws < 100) throw ValidationError("posterior config: draws >= 100 required");
    for (int v = 0; v < kCells; ++v)
        if (!(prior_alpha[v] > 0.0))
            throw ValidationError("posterior config: prior_alpha entries must be > 0");
    if (clip_eps != 0.0) {
        if (!(clip_eps > 0.0 && clip_eps <= 0.5 / draws))
            throw ValidationError("posterior config: clip_eps must lie in (0, 1/(2*draws)]");
    }
    if (!(bandwidth_scale >= 0.0))
        throw ValidationError("posterior config: bandwidth_scale must be >= 0");
}

namespace {

// marginals without validation; hot path for posterior draws
inline void marginals_raw(const double* eta, double* pi) {
    pi[0] = 1.0 - eta[0];
    for (int k = 1; k < kOutcomes; ++k) {
        double s = 0.0;
        for (int cell : marginal_cells(k)) s += eta[cell];
        pi[k] = s;
    }
}

}  // namespace

DatasetCounts MultinomialLiftModel::sample(const Submodel& submodel, const GroupSizes& sizes,
                                           StreamRng& rng) const {
    DatasetCounts data;
    data.counts_a.resize(kCells);
    data.counts_b.resize(kCells);
    rng.multinomial(sizes.n_a, submodel.params_a.eta.data(), data.counts_a.data(), kCells);
    rng.multinomial(sizes.n_b, submodel.params_b.eta.data(), data.counts_b.data(), kCells);
    return data;
}

void MultinomialLiftModel::posterior_theta(const DatasetCounts& data, const GroupSizes&,
                                           const PosteriorConfig& cfg, StreamRng& rng,
                                           double* out, long* rejects) const {
    double alpha_a[kCells], alpha_b[kCells];
    for (int v = 0; v < kCells; ++v) {
        alpha_a[v] = cfg.prior_alpha[v] + static_cast<double>(data.counts_a[v]);
        alpha_b[v] = cfg.prior_alpha[v] + static_cast<double>(data.counts_b[v]);
    }
    double eta_a[kCells], eta_b[kCells], pi_a[kOutcomes], pi_b[kOutcomes];
    for (int s = 0; s < cfg.draws; ++s) {
        for (;;) {
            rng.dirichlet(alpha_a, eta_a, kCells);
            rng.dirichlet(alpha_b, eta_b, kCells);
            marginals_raw(eta_a, pi_a);
            marginals_raw(eta_b, pi_b);
            bool ok = true;
            for (int k = 0; k < kOutcomes; ++k)
                if (!(pi_a[k] > 0.0)) { ok = false; break; }
            if (ok) break;
            ++(*rejects);
        }
        double* row = out + static_cast<size_t>(s) * kOutcomes;
        for (int k = 0; k < kOutcomes; ++k) row[k] = (pi_b[k] - pi_a[k]) / pi_a[k];
    }
}

std::vector<double> MultinomialLiftModel::theta(const Submodel& submodel) const {
    const auto t = submodel_theta(submodel);
    return {t.begin(), t.end()};
}

std::vector<double> MultinomialLiftModel::mle_covariance(const Submodel& submodel,
                                                         double c) const {
    if (!(c > 0.0)) throw ValidationError("mle_covariance: c must be > 0");
    const auto pi_a = marginals_from_eta(submodel.params_a);
    const auto pi_b = marginals_from_eta(submodel.params_b);
    for (int k = 0; k < kOutcomes; ++k)
        if (!(pi_a[k] > 0.0))
            throw NumericError("mle_covariance: pi_A is 0 for metric " + std::to_string(k + 1));

    // gradient of theta_k in (eta_a, eta_b); d pi_k / d eta_v is 0/1 except
    // the engagement complement
    double grad_pi[kOutcomes][kCells] = {};
    grad_pi[0][0] = -1.0;
    for (int k = 1; k < kOutcomes; ++k)
        for (int cell : marginal_cells(k)) grad_pi[k][cell] = 1.0;

    const double frac_a = c / (1.0 + c);
    const double frac_b = 1.0 / (1.0 + c);

    std::vector<double> cov(kOutcomes * kOutcomes, 0.0);
    // per-group contribution: G_j Sigma_j G_j' / frac_j with
    // Sigma_j = diag(eta_j) - eta_j eta_j'
    for (int group = 0; group < 2; ++group) {
        const auto& eta = (group == 0) ? submodel.params_a.eta : submodel.params_b.eta;
        const double frac = (group == 0) ? frac_a : frac_b;
        double g[kOutcomes][kCells];
        for (int k = 0; k < kOutcomes; ++k) {
            for (int v = 0; v < kCells; ++v) {
                const double m = grad_pi[k][v];
                g[k][v] = (group == 0) ? (-pi_b[k] / (pi_a[k] * pi_a[k])) * m
                                       : m / pi_a[k];
            }
        }
        for (int k = 0; k < kOutcomes; ++k) {
            // u = Sigma g_k = diag(eta) g_k - eta (eta' g_k)
            double dot = 0.0;
            for (int v = 0; v < kCells; ++v) dot += eta[v] * g[k][v];
            double u[kCells];
            for (int v = 0; v < kCells; ++v) u[v] = eta[v] * g[k][v] - eta[v] * dot;
            for (int h = k; h < kOutcomes; ++h) {
                double s = 0.0;
                for (int v = 0; v < kCells; ++v) s += g[h][v] * u[v];
                cov[k * kOutcomes + h] += s / frac;
                if (h != k) cov[h * kOutcomes + k] += s / frac;
            }
        }
    }
    return cov;
}

DatasetCounts IndependentBinomialLiftModel::sample(const Submodel& submodel,
                                                   const GroupSizes& sizes,
                                                   StreamRng& rng) const {
    const auto pi_a = marginals_from_eta(submodel.params_a);
    const auto pi_b = marginals_from_eta(submodel.params_b);
    DatasetCounts data;
    data.counts_a.resize(kOutcomes);
    data.counts_b.resize(kOutcomes);
    for (int k = 0; k < kOutcomes; ++k) {
        data.counts_a[k] = rng.binomial(sizes.n_a, pi_a[k]);
        data.counts_b[k] = rng.binomial(sizes.n_b, pi_b[k]);
    }
    return data;
}

void IndependentBinomialLiftModel::posterior_theta(const DatasetCounts& data,
                                                   const GroupSizes& sizes,
                                                   const PosteriorConfig& cfg, StreamRng& rng,
                                                   double* out, long* rejects) const {
    for (int s = 0; s < cfg.draws; ++s) {
        double* row = out + static_cast<size_t>(s) * kOutcomes;
        for (int k = 0; k < kOutcomes; ++k) {
            for (;;) {
                const double pa = rng.beta(1.0 + data.counts_a[k],
                                           1.0 + static_cast<double>(sizes.n_a - data.counts_a[k]));
                const double pb = rng.beta(1.0 + data.counts_b[k],
                                           1.0 + static_cast<double>(sizes.n_b - data.counts_b[k]));
                if (pa > 0.0) {
                    row[k] = (pb - pa) / pa;
                    break;
                }
                ++(*rejects);
            }
        }
    }
}

std::vector<double> IndependentBinomialLiftModel::theta(const Submodel& submodel) const {
    const auto t = submodel_theta(submodel);
    return {t.begin(), t.end()};
}

std::vector<double> IndependentBinomialLiftModel::mle_covariance(const Submodel& submodel,
                                                                 double c) const {
    if (!(c > 0.0)) throw ValidationError("mle_covariance: c must be > 0");
    const auto pi_a = marginals_from_eta(submodel.params_a);
    const auto pi_b = marginals_from_eta(submodel.params_b);
    const double frac_a = c / (1.0 + c);
    const double frac_b = 1.0 / (1.0 + c);
    std::vector<double> cov(kOutcomes * kOutcomes, 0.0);
    for (int k = 0; k < kOutcomes; ++k) {
        if (!(pi_a[k] > 0.0))
            throw NumericError("mle_covariance: pi_A is 0 for metric " + std::to_string(k + 1));
        const double var_a = pi_a[k] * (1.0 - pi_a[k]) / frac_a;
        const double var_b = pi_b[k] * (1.0 - pi_b[k]) / frac_b;
        cov[k * kOutcomes + k] = var_b / (pi_a[k] * pi_a[k]) +
                                 var_a * pi_b[k] * pi_b[k] / std::pow(pi_a[k], 4);
    }
    return cov;
}

const ModelFamily& multinomial_model() {
    static const MultinomialLiftModel model;
    return model;
}

const ModelFamily& independent_binomial_model() {
    static const IndependentBinomialLiftModel model;
    return model;
}

}  // namespace abd
