#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "abd/construct.hpp"
#include "abd/design.hpp"
#include "abd/errors.hpp"
#include "abd/simulate.hpp"
#include "abd/stats.hpp"

using namespace abd;

namespace {

const std::array<double, 5> kExampleMarginals{0.489, 0.230, 0.156, 0.047, 0.032};

MetricPanel superiority_panel() {
    MetricPanel panel;
    panel.hypotheses.assign(kOutcomes, HypothesisSpec{0.0, kInf});
    return panel;
}

// hand-built single-metric field: `rows` lines with given slopes/anchors
LogitLineField synthetic_field(const std::vector<double>& anchors,
                               const std::vector<double>& slopes,
                               const std::vector<char>& truth, long n0) {
    LogitLineField field;
    field.basis = LogitLineField::Basis::LimitSlope;
    field.k = 1;
    field.reps_per_submodel = static_cast<int>(anchors.size());
    field.num_submodels = 1;
    field.n_anchor0 = n0;
    for (size_t r = 0; r < anchors.size(); ++r) {
        field.submodel_index.push_back(0);
        field.truth.push_back(truth[r]);
        field.slope.push_back(slopes[r]);
        field.intercept.push_back(anchors[r] - slopes[r] * static_cast<double>(n0));
    }
    return field;
}

}  // namespace

TEST_CASE("theorem extrapolation anchors at the simulated panel") {
    const MetricPanel panel = superiority_panel();
    const PsiMixture psi = build_psi_subsets(kExampleMarginals, 0.10, panel, {1});
    PosteriorConfig cfg;
    cfg.draws = 300;
    const long n0 = 2000;
    const ProbPanel p0 = build_panel(psi, panel, {1.0, n0}, cfg, 6, 3, kPassDesignN0, 2);
    const SlopeField slopes = slope_field(psi, panel, 1.0, 6);
    const LogitLineField field = extrapolate_limit_slopes(p0, slopes);

    for (long r = 0; r < p0.rows(); ++r) {
        for (int k = 0; k < p0.k; ++k) {
            CHECK(std::fabs(field.line_at(r, k, static_cast<double>(n0)) -
                            p0.logit_at(r, k)) <= 1e-9);
        }
    }
    const ProbPanel round_trip = evaluate_at(field, n0);
    for (long r = 0; r < p0.rows(); ++r)
        for (int k = 0; k < p0.k; ++k)
            CHECK(std::fabs(round_trip.prob(r, k) - p0.prob(r, k)) <= 1e-9);

    // true hypotheses gain probability with n; boundary rows stay flat
    const ProbPanel far = evaluate_at(field, 8 * n0);
    for (long r = 0; r < p0.rows(); ++r) {
        for (int k = 0; k < p0.k; ++k) {
            if (p0.truth_at(r, k))
                CHECK(far.prob(r, k) >= round_trip.prob(r, k) - 1e-12);
            else
                CHECK(far.prob(r, k) == doctest::Approx(round_trip.prob(r, k)));
        }
    }
    // probabilities stay inside (0,1) arbitrarily far out
    const ProbPanel huge = evaluate_at(field, 1000000000);
    for (double p : huge.probs) {
        CHECK(p > 0.0);
        CHECK(p < 1.0);
    }
}

TEST_CASE("smallest_power_n finds a known crossing") {
    // 10 rows: 6 true with lines crossing upward, 4 false sinking
    std::vector<double> anchors, slopes;
    std::vector<char> truth;
    for (int i = 0; i < 6; ++i) {
        anchors.push_back(-1.0 - 0.25 * i);
        slopes.push_back(0.01);
        truth.push_back(1);
    }
    for (int i = 0; i < 4; ++i) {
        anchors.push_back(-0.5);
        slopes.push_back(-0.01);
        truth.push_back(0);
    }
    const LogitLineField field = synthetic_field(anchors, slopes, truth, 100);
    const ThresholdScheme scheme;
    // false rows carry t_r = 0 and cap mean power at 0.6; target 0.5
    const double q = 0.2, beta = 0.5;

    const auto result = smallest_power_n(field, scheme, q, beta, 4, 4000);

    // oracle: linear scan over the full range
    long expect = -1;
    for (long n = 4; n <= 4000; ++n) {
        const auto opt = optimize_gamma(evaluate_at(field, n), q, scheme);
        if (opt.feasible && opt.estimates.power_hat >= 1.0 - beta) {
            expect = n;
            break;
        }
    }
    REQUIRE(expect > 0);
    CHECK(result.n == expect);

    // the returned n satisfies the criteria and its predecessor does not
    const auto at_n = optimize_gamma(evaluate_at(field, result.n), q, scheme);
    CHECK(at_n.feasible);
    CHECK(at_n.estimates.power_hat >= 1.0 - beta);
    const auto below = optimize_gamma(evaluate_at(field, result.n - 1), q, scheme);
    const bool below_ok = below.feasible && below.estimates.power_hat >= 1.0 - beta;
    CHECK_FALSE(below_ok);
}

TEST_CASE("a hint near the crossing refines to the same answer") {
    std::vector<double> anchors, slopes;
    std::vector<char> truth;
    for (int i = 0; i < 6; ++i) {
        anchors.push_back(-1.0 - 0.25 * i);
        slopes.push_back(0.01);
        truth.push_back(1);
    }
    for (int i = 0; i < 4; ++i) {
        anchors.push_back(-0.5);
        slopes.push_back(-0.01);
        truth.push_back(0);
    }
    const LogitLineField field = synthetic_field(anchors, slopes, truth, 100);
    const ThresholdScheme scheme;
    const auto plain = smallest_power_n(field, scheme, 0.2, 0.5, 4, 4000);
    // hint above, at, and below the crossing all land on the same n
    for (long hint : {plain.n, plain.n + 500, std::max<long>(5, plain.n / 3)}) {
        const auto hinted = smallest_power_n(field, scheme, 0.2, 0.5, 4, 4000, nullptr, hint);
        CHECK(hinted.n == plain.n);
    }
}

TEST_CASE("immediate satisfaction returns the lower bound") {
    const LogitLineField field =
        synthetic_field({3.0, 3.0, -3.0}, {0.001, 0.001, -0.001}, {1, 1, 0}, 50);
    const auto result = smallest_power_n(field, ThresholdScheme{}, 0.3, 0.35, 10, 1000);
    CHECK(result.n == 10);
}

TEST_CASE("range exhaustion carries diagnostics") {
    // false rows dominate at every n: fdr bound unattainable
    const LogitLineField field =
        synthetic_field({2.0, 2.0, -1.0}, {0.01, 0.01, 0.0}, {0, 0, 1}, 50);
    try {
        smallest_power_n(field, ThresholdScheme{}, 0.01, 0.2, 4, 500);
        FAIL("expected RangeExhaustedError");
    } catch (const RangeExhaustedError& e) {
        CHECK(e.n_lo == 4);
        CHECK(e.n_hi == 500);
    }
}

TEST_CASE("two-point refit recovers a rank-preserving generating field") {
    const MetricPanel panel = superiority_panel();
    const PsiMixture psi = build_psi_subsets(kExampleMarginals, 0.10, panel, {2});
    PosteriorConfig cfg;
    cfg.draws = 300;
    const long n0 = 1500, n1 = 4500;
    const ProbPanel p0 = build_panel(psi, panel, {1.0, n0}, cfg, 10, 11, kPassDesignN0, 2);

    // synthesize panel1 from a generating field with subgroup-constant slopes
    const SlopeField slopes = slope_field(psi, panel, 1.0, 10);
    const LogitLineField generating = extrapolate_limit_slopes(p0, slopes);
    ProbPanel p1 = evaluate_at(generating, n1);

    const LogitLineField refit = refit_two_point(p0, p1);
    for (long r = 0; r < p0.rows(); ++r)
        for (int k = 0; k < p0.k; ++k)
            CHECK(std::fabs(refit.slope[r * p0.k + k] - generating.slope[r * p0.k + k]) <=
                  1e-6);

    // anchors reproduce: exact rows at n1, sorted multisets at n0
    const ProbPanel at1 = evaluate_at(refit, n1);
    for (long r = 0; r < p1.rows(); ++r)
        for (int k = 0; k < p1.k; ++k)
            CHECK(std::fabs(at1.logit_at(r, k) - p1.logit_at(r, k)) <= 1e-9);

    const ProbPanel at0 = evaluate_at(refit, n0);
    const int reps = p0.reps_per_submodel;
    for (int sub = 0; sub < p0.num_submodels; ++sub) {
        for (int k = 0; k < p0.k; ++k) {
            std::vector<double> got, want;
            for (int d = 0; d < reps; ++d) {
                got.push_back(at0.logit_at(sub * reps + d, k));
                want.push_back(p0.logit_at(sub * reps + d, k));
            }
            std::sort(got.begin(), got.end());
            std::sort(want.begin(), want.end());
            for (int d = 0; d < reps; ++d) CHECK(std::fabs(got[d] - want[d]) <= 1e-9);
        }
    }

    // pairing is a bijection within every subgroup
    for (int sub = 0; sub < p0.num_submodels; ++sub) {
        for (int k = 0; k < p0.k; ++k) {
            std::vector<long> seen;
            for (int d = 0; d < reps; ++d)
                seen.push_back(refit.pairing[(sub * reps + d) * p0.k + k]);
            std::sort(seen.begin(), seen.end());
            for (int d = 0; d < reps; ++d) CHECK(seen[d] == sub * reps + d);
        }
    }

    CHECK_THROWS_AS(refit_two_point(p0, p0), ValidationError);
}

TEST_CASE("subgroup of size one is a plain two-point line") {
    ProbPanel p0, p1;
    p0.k = p1.k = 1;
    p0.n = 100;
    p1.n = 300;
    p0.reps_per_submodel = p1.reps_per_submodel = 1;
    p0.num_submodels = p1.num_submodels = 1;
    p0.submodel_index = {0};
    p1.submodel_index = {0};
    p0.truth = {1};
    p1.truth = {1};
    p0.logits = {-1.0};
    p0.probs = {expit(-1.0)};
    p1.logits = {1.0};
    p1.probs = {expit(1.0)};
    const auto field = refit_two_point(p0, p1);
    CHECK(field.slope[0] == doctest::Approx(0.01));
    CHECK(field.line_at(0, 0, 100) == doctest::Approx(-1.0));
    CHECK(field.line_at(0, 0, 300) == doctest::Approx(1.0));
}

TEST_CASE("full design run: two simulations, criteria met under the final field") {
    const MetricPanel panel = superiority_panel();
    const PsiMixture psi = build_psi_subsets(kExampleMarginals, 0.10, panel, {1});
    PosteriorConfig cfg;
    cfg.draws = 500;

    DesignSettings settings;
    settings.q = 0.10;
    settings.beta = 0.30;
    settings.n0 = 3000;
    settings.c = 1.0;
    settings.reps_per_submodel = 150;
    settings.seed = 2718;
    settings.workers = 2;

    const DesignRecommendation rec =
        run_design(multinomial_model(), psi, panel, cfg, settings);
    CHECK(rec.sim_passes == 2);
    CHECK(rec.n_total == rec.n_a + rec.n_b);
    CHECK(rec.estimates.fdr_hat <= settings.q);
    CHECK(rec.estimates.power_hat >= 1.0 - settings.beta);
    CHECK(!rec.trace.empty());

    // verification closure: an independent panel at the recommendation stays
    // within Monte Carlo error of the targets
    const ProbPanel fresh = build_panel(psi, panel, {settings.c, rec.n_total}, cfg,
                                        settings.reps_per_submodel, settings.seed + 1,
                                        kPassVerify, 2);
    const auto est = estimate_oc(classify(fresh, rec.gamma));
    CHECK(est.fdr_hat <= settings.q + 2.0 * est.fdr_mcse);
    CHECK(est.power_hat >= 1.0 - settings.beta - 2.0 * est.power_mcse);

    // determinism of the whole orchestration
    const DesignRecommendation again =
        run_design(multinomial_model(), psi, panel, cfg, settings);
    CHECK(again.n_total == rec.n_total);
    CHECK(again.gamma.gamma == rec.gamma.gamma);
}

TEST_CASE("trace export carries probes and the result") {
    const MetricPanel panel = superiority_panel();
    const PsiMixture psi = build_psi_subsets(kExampleMarginals, 0.10, panel, {1});
    PosteriorConfig cfg;
    cfg.draws = 300;
    DesignSettings settings;
    settings.q = 0.15;
    settings.beta = 0.35;
    settings.n0 = 2000;
    settings.reps_per_submodel = 60;
    settings.seed = 5;
    settings.workers = 2;
    const auto rec = run_design(multinomial_model(), psi, panel, cfg, settings);
    const std::string csv = trace_to_csv(rec.trace, panel.k());
    CHECK(csv.find("stage,basis,n,feasible") == 0);
    int sims = 0, probes = 0, results = 0;
    for (const auto& row : rec.trace) {
        if (row.stage == "sim") ++sims;
        if (row.stage == "probe") ++probes;
        if (row.stage == "result") ++results;
    }
    CHECK(sims == 2);
    CHECK(probes > 2);
    CHECK(results == 1);
}
