#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "abd/construct.hpp"
#include "abd/errors.hpp"
#include "abd/panel.hpp"
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

Submodel example_submodel(const std::vector<int>& false_set, const MetricPanel& panel) {
    SubmodelTarget target;
    target.marginals_a = kExampleMarginals;
    for (int k = 0; k < kOutcomes; ++k) target.lift_targets[k] = 0.10;
    for (int k : false_set) target.lift_targets[k] = 0.0;
    target.false_set = false_set;
    return construct_submodel(target, panel);
}

}  // namespace

TEST_CASE("degenerate cell probabilities give deterministic counts") {
    const MetricPanel panel = superiority_panel();
    Submodel sub;
    sub.params_a.eta.fill(0.0);
    sub.params_a.eta[0] = 1.0;
    sub.params_b = sub.params_a;
    sub.false_set = {0, 1, 2, 3, 4};
    StreamRng rng(1, 1);
    const auto data = sample_dataset(sub, {1.0, 20}, rng);
    CHECK(data.counts_a[0] == 10);
    CHECK(data.counts_b[0] == 10);
    for (int v = 1; v < kCells; ++v) {
        CHECK(data.counts_a[v] == 0);
        CHECK(data.counts_b[v] == 0);
    }
}

TEST_CASE("dataset cell frequencies concentrate on the generating probabilities") {
    const MetricPanel panel = superiority_panel();
    const Submodel sub = example_submodel({1, 3}, panel);
    const AllocationPlan plan{1.0, 4000};
    const GroupSizes sizes = split_allocation(plan);
    const int reps = 10000;
    std::array<double, kCells> mean{};
    for (int r = 0; r < reps; ++r) {
        StreamRng rng(99, make_stream(0, 0, 0, r));
        const auto data = multinomial_model().sample(sub, sizes, rng);
        long total = 0;
        for (int v = 0; v < kCells; ++v) {
            total += data.counts_a[v];
            mean[v] += static_cast<double>(data.counts_a[v]) / sizes.n_a;
        }
        CHECK(total == sizes.n_a);
    }
    for (int v = 0; v < kCells; ++v) {
        mean[v] /= reps;
        const double p = sub.params_a.eta[v];
        const double se = std::sqrt(std::max(p * (1 - p), 1e-12) /
                                    (static_cast<double>(sizes.n_a) * reps));
        CHECK(std::fabs(mean[v] - p) <= 3.0 * se + 1e-9);
    }
}

TEST_CASE("identical stream ids reproduce identical datasets") {
    const MetricPanel panel = superiority_panel();
    const Submodel sub = example_submodel({2}, panel);
    const GroupSizes sizes{500, 500};
    StreamRng a(7, make_stream(0, 1, 3, 42));
    StreamRng b(7, make_stream(0, 1, 3, 42));
    const auto da = multinomial_model().sample(sub, sizes, a);
    const auto db = multinomial_model().sample(sub, sizes, b);
    CHECK(da.counts_a == db.counts_a);
    CHECK(da.counts_b == db.counts_b);
}

TEST_CASE("posterior probability saturates on full support and clips") {
    MetricPanel degenerate;
    degenerate.hypotheses.assign(kOutcomes, HypothesisSpec{-kInf, kInf});
    const MetricPanel panel = superiority_panel();
    const Submodel sub = example_submodel({0}, panel);
    const AllocationPlan plan{1.0, 400};
    const GroupSizes sizes = split_allocation(plan);
    StreamRng rng_data(3, make_stream(0, 0, 0, 0));
    const auto data = multinomial_model().sample(sub, sizes, rng_data);
    PosteriorConfig cfg;
    cfg.draws = 500;
    StreamRng rng_post(3, make_stream(1, 0, 0, 0));
    const auto probs =
        posterior_prob(data, degenerate, cfg, rng_post, sizes, multinomial_model());
    for (double p : probs) CHECK(p == doctest::Approx(1.0 - cfg.effective_clip()));
}

TEST_CASE("posterior concentrates under a large sample when the effect is real") {
    const MetricPanel panel = superiority_panel();
    const Submodel sub = example_submodel({1, 2, 3, 4}, panel);  // metric 0 carries the lift
    const AllocationPlan plan{1.0, 2000000};
    const GroupSizes sizes = split_allocation(plan);
    StreamRng rng_data(5, make_stream(0, 0, 0, 0));
    const auto data = multinomial_model().sample(sub, sizes, rng_data);
    PosteriorConfig cfg;
    cfg.draws = 2000;
    StreamRng rng_post(5, make_stream(1, 0, 0, 0));
    const auto probs = posterior_prob(data, panel, cfg, rng_post, sizes, multinomial_model());
    CHECK(probs[0] >= 0.99);
}

TEST_CASE("boundary lifts average to one half across repetitions") {
    const MetricPanel panel = superiority_panel();
    const Submodel sub = example_submodel({0, 1}, panel);  // metrics 0,1 on the boundary
    const AllocationPlan plan{1.0, 100000};
    const GroupSizes sizes = split_allocation(plan);
    PosteriorConfig cfg;
    cfg.draws = 1000;
    const int reps = 250;
    double mean0 = 0.0;
    for (int r = 0; r < reps; ++r) {
        StreamRng rng_data(11, make_stream(0, 0, 0, r));
        const auto data = multinomial_model().sample(sub, sizes, rng_data);
        StreamRng rng_post(11, make_stream(1, 0, 0, r));
        const auto probs =
            posterior_prob(data, panel, cfg, rng_post, sizes, multinomial_model());
        mean0 += probs[0];
    }
    mean0 /= reps;
    CHECK(std::fabs(mean0 - 0.5) <= 0.05);
}

TEST_CASE("panel assembly: shape, truth metadata, logit bounds") {
    const MetricPanel panel = superiority_panel();
    const PsiMixture psi = build_psi_subsets(kExampleMarginals, 0.10, panel, {1, 2});
    REQUIRE(psi.size() == 15);
    PosteriorConfig cfg;
    cfg.draws = 400;
    const AllocationPlan plan{1.0, 2000};
    const ProbPanel p = build_panel(psi, panel, plan, cfg, 8, 1234, kPassDesignN0, 2);
    CHECK(p.rows() == 15 * 8);
    CHECK(p.k == kOutcomes);
    CHECK(p.n == 2000);
    const double logit_cap = logit(1.0 - cfg.effective_clip());
    for (long r = 0; r < p.rows(); ++r) {
        const int sub = p.submodel_index[r];
        const int lambda = static_cast<int>(psi.submodels[sub].false_set.size());
        int truths = 0;
        for (int k = 0; k < p.k; ++k) {
            CHECK(std::isfinite(p.logit_at(r, k)));
            CHECK(std::fabs(p.logit_at(r, k)) <= logit_cap + 1e-9);
            if (p.truth_at(r, k)) ++truths;
        }
        CHECK(truths == kOutcomes - lambda);
    }
}

TEST_CASE("panels are bitwise deterministic across worker counts") {
    const MetricPanel panel = superiority_panel();
    const PsiMixture psi = build_psi_subsets(kExampleMarginals, 0.10, panel, {1});
    PosteriorConfig cfg;
    cfg.draws = 300;
    const AllocationPlan plan{1.0, 1000};
    const ProbPanel p1 = build_panel(psi, panel, plan, cfg, 10, 77, kPassDesignN0, 1);
    const ProbPanel p8 = build_panel(psi, panel, plan, cfg, 10, 77, kPassDesignN0, 8);
    REQUIRE(p1.rows() == p8.rows());
    CHECK(std::memcmp(p1.probs.data(), p8.probs.data(), p1.probs.size() * sizeof(double)) == 0);
    CHECK(std::memcmp(p1.logits.data(), p8.logits.data(),
                      p1.logits.size() * sizeof(double)) == 0);
    CHECK(p1.submodel_index == p8.submodel_index);
    CHECK(p1.truth == p8.truth);

    // different pass tags give independent panels
    const ProbPanel other = build_panel(psi, panel, plan, cfg, 10, 77, kPassDesignN1, 2);
    CHECK(std::memcmp(p1.probs.data(), other.probs.data(),
                      p1.probs.size() * sizeof(double)) != 0);
}

TEST_CASE("panel export round-trips exactly") {
    const MetricPanel panel = superiority_panel();
    const PsiMixture psi = build_psi_subsets(kExampleMarginals, 0.10, panel, {3});
    PosteriorConfig cfg;
    cfg.draws = 200;
    const ProbPanel p = build_panel(psi, panel, {1.0, 800}, cfg, 4, 5, kPassDesignN0, 2);
    const std::string text = panel_to_csv(p);
    const ProbPanel back = panel_from_csv(text);
    REQUIRE(back.rows() == p.rows());
    CHECK(back.k == p.k);
    CHECK(back.n == p.n);
    CHECK(std::memcmp(back.probs.data(), p.probs.data(), p.probs.size() * sizeof(double)) == 0);
    CHECK(std::memcmp(back.logits.data(), p.logits.data(),
                      p.logits.size() * sizeof(double)) == 0);
    CHECK(back.truth == p.truth);
    CHECK(back.submodel_index == p.submodel_index);
}

TEST_CASE("independent-binomial panels share the layout and analytic posterior mean") {
    const MetricPanel panel = superiority_panel();
    const PsiMixture psi = build_psi_subsets(kExampleMarginals, 0.10, panel, {2});
    PosteriorConfig cfg;
    cfg.draws = 400;
    const AllocationPlan plan{1.0, 2000};
    const ProbPanel dep = build_panel(psi, panel, plan, cfg, 5, 21, kPassDesignN0, 2);
    const ProbPanel ind = build_panel_independent(psi, panel, plan, cfg, 5, 21, kPassDesignN0, 2);
    CHECK(ind.rows() == dep.rows());
    CHECK(ind.k == dep.k);
    CHECK(ind.truth == dep.truth);

    // Beta(1+s, 1+n-s) posterior mean matches (1+s)/(2+n)
    const GroupSizes sizes = split_allocation(plan);
    const Submodel& sub = psi.submodels[0];
    StreamRng rng_data(21, make_stream(0, 9, 0, 0));
    const auto data = independent_binomial_model().sample(sub, sizes, rng_data);
    const int draws = 40000;
    StreamRng rng(21, make_stream(1, 9, 0, 0));
    double mean = 0.0;
    for (int s = 0; s < draws; ++s)
        mean += rng.beta(1.0 + data.counts_a[0],
                         1.0 + static_cast<double>(sizes.n_a - data.counts_a[0]));
    mean /= draws;
    const double analytic = (1.0 + data.counts_a[0]) / (2.0 + sizes.n_a);
    CHECK(std::fabs(mean - analytic) <= 5.0 * std::sqrt(analytic * (1 - analytic) / draws));
}

TEST_CASE("posterior credible intervals cover the truth at the nominal rate") {
    const MetricPanel panel = superiority_panel();
    const Submodel sub = example_submodel({4}, panel);
    const auto theta_true = submodel_theta(sub);
    const AllocationPlan plan{1.0, 200000};
    const GroupSizes sizes = split_allocation(plan);
    PosteriorConfig cfg;
    cfg.draws = 2000;
    const int reps = 1000;
    std::array<int, kOutcomes> covered{};
    std::vector<double> draws(static_cast<size_t>(cfg.draws) * kOutcomes);
    std::vector<double> col(cfg.draws);
    for (int r = 0; r < reps; ++r) {
        StreamRng rng_data(31, make_stream(0, 0, 0, r));
        const auto data = multinomial_model().sample(sub, sizes, rng_data);
        StreamRng rng_post(31, make_stream(1, 0, 0, r));
        long rejects = 0;
        multinomial_model().posterior_theta(data, sizes, cfg, rng_post, draws.data(), &rejects);
        for (int k = 0; k < kOutcomes; ++k) {
            for (int s = 0; s < cfg.draws; ++s) col[s] = draws[s * kOutcomes + k];
            std::sort(col.begin(), col.end());
            const double lo = col[static_cast<int>(0.05 * (cfg.draws - 1))];
            const double hi = col[static_cast<int>(0.95 * (cfg.draws - 1))];
            if (theta_true[k] >= lo && theta_true[k] <= hi) ++covered[k];
        }
    }
    for (int k = 0; k < kOutcomes; ++k) {
        const double rate = static_cast<double>(covered[k]) / reps;
        CHECK(std::fabs(rate - 0.90) <= 0.02);
    }
}

TEST_CASE("simulation pass counter increments once per panel") {
    const MetricPanel panel = superiority_panel();
    const PsiMixture psi = build_psi_subsets(kExampleMarginals, 0.10, panel, {1});
    PosteriorConfig cfg;
    cfg.draws = 200;
    const long before = simulation_pass_count();
    build_panel(psi, panel, {1.0, 400}, cfg, 2, 1, kPassDesignN0, 1);
    build_panel_independent(psi, panel, {1.0, 400}, cfg, 2, 1, kPassDesignN0, 1);
    CHECK(simulation_pass_count() - before == 2);
}

TEST_CASE("unequal submodel weights are rejected by the panel builder") {
    const MetricPanel panel = superiority_panel();
    PsiMixture psi = build_psi_subsets(kExampleMarginals, 0.10, panel, {1});
    psi.submodels[0].weight = 0.4;
    psi.submodels[1].weight = 0.0;
    PosteriorConfig cfg;
    cfg.draws = 200;
    CHECK_THROWS_AS((build_panel(psi, panel, {1.0, 400}, cfg, 2, 1, kPassDesignN0, 1)),
                    ValidationError);
}
