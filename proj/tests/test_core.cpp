#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "abd/construct.hpp"
#include "abd/core.hpp"
#include "abd/errors.hpp"

using namespace abd;

namespace {

const std::array<double, 5> kExampleMarginals{0.489, 0.230, 0.156, 0.047, 0.032};

MetricPanel superiority_panel() {
    MetricPanel panel;
    panel.hypotheses.assign(kOutcomes, HypothesisSpec{0.0, kInf});
    return panel;
}

}  // namespace

TEST_CASE("hypothesis validation") {
    CHECK_NOTHROW((HypothesisSpec{0.0, kInf}.validate()));
    CHECK_NOTHROW((HypothesisSpec{-kInf, 0.0}.validate()));
    CHECK_NOTHROW((HypothesisSpec{-0.1, 0.1}.validate()));
    CHECK_THROWS_AS((HypothesisSpec{0.1, 0.1}.validate()), ValidationError);
    CHECK_THROWS_AS((HypothesisSpec{0.2, 0.1}.validate()), ValidationError);
    CHECK_THROWS_AS((HypothesisSpec{-kInf, kInf}.validate()), ValidationError);
}

TEST_CASE("marginal map follows the funnel structure") {
    MultinomialGroupParams p;
    p.eta.fill(0.0);
    p.eta[0] = 1.0;
    auto pi = marginals_from_eta(p);
    for (int k = 0; k < kOutcomes; ++k) CHECK(pi[k] == 0.0);

    // single cell: engaged + editor + pricing + dialog + created (cell 13)
    p.eta.fill(0.0);
    p.eta[12] = 1.0;
    pi = marginals_from_eta(p);
    for (int k = 0; k < kOutcomes; ++k) CHECK(pi[k] == doctest::Approx(1.0));

    // engaged + editor only (cell 8)
    p.eta.fill(0.0);
    p.eta[7] = 1.0;
    pi = marginals_from_eta(p);
    CHECK(pi[0] == doctest::Approx(1.0));
    CHECK(pi[1] == doctest::Approx(1.0));
    CHECK(pi[2] == 0.0);
    CHECK(pi[3] == 0.0);
    CHECK(pi[4] == 0.0);

    // engaged + dialog, no creation (cell 3)
    p.eta.fill(0.0);
    p.eta[2] = 1.0;
    pi = marginals_from_eta(p);
    CHECK(pi[0] == doctest::Approx(1.0));
    CHECK(pi[1] == 0.0);
    CHECK(pi[2] == 0.0);
    CHECK(pi[3] == doctest::Approx(1.0));
    CHECK(pi[4] == 0.0);

    p.eta.fill(0.0);
    p.eta[0] = 0.5;
    CHECK_THROWS_AS(marginals_from_eta(p), ValidationError);
}

TEST_CASE("lift values and edge cases") {
    CHECK(lift(0.489, 0.489) == 0.0);
    CHECK(std::fabs(lift(0.489, 0.5379) - 0.10) <= 1e-12);
    CHECK(lift(0.5, 0.25) == doctest::Approx(-0.5));
    CHECK_THROWS_AS(lift(0.0, 0.3), NumericError);
}

TEST_CASE("lift recovers the relative change across the grid") {
    for (double pi = 0.01; pi <= 0.99; pi += 0.07) {
        for (double x = -0.5; x <= 0.5; x += 0.1) {
            CHECK(std::fabs(lift(pi, pi * (1.0 + x)) - x) <= 1e-12);
        }
    }
}

TEST_CASE("truth flags from constructed submodels") {
    const MetricPanel panel = superiority_panel();

    SubmodelTarget target;
    target.marginals_a = kExampleMarginals;
    target.lift_targets = {0.10, 0.0, 0.0, 0.0, 0.0};
    target.false_set = {1, 2, 3};  // mislabeled: metric 4 sits on the boundary too
    CHECK_THROWS_AS(construct_submodel(target, panel), ValidationError);

    target.false_set = {1, 2, 3, 4};
    const Submodel sub = construct_submodel(target, panel);
    const auto flags = truth_flags(sub, panel);
    CHECK(flags == std::vector<char>{1, 0, 0, 0, 0});

    target.lift_targets = {0.10, 0.0, 0.0, 0.0, 0.10};
    target.false_set = {1, 2, 3};
    const auto flags2 = truth_flags(construct_submodel(target, panel), panel);
    CHECK(flags2 == std::vector<char>{1, 0, 0, 0, 1});
}

TEST_CASE("boundary lifts classify as false (open interval)") {
    const MetricPanel panel = superiority_panel();
    Submodel sub;
    sub.params_a = construct_group(kExampleMarginals);
    sub.params_b = sub.params_a;  // every lift exactly 0
    sub.false_set = {0, 1, 2, 3, 4};
    const auto flags = truth_flags(sub, panel);
    for (int k = 0; k < kOutcomes; ++k) CHECK(flags[k] == 0);
}

TEST_CASE("mislabeled submodels are rejected") {
    const MetricPanel panel = superiority_panel();
    Submodel sub;
    sub.params_a = construct_group(kExampleMarginals);
    sub.params_b = sub.params_a;
    sub.false_set = {0, 1, 2, 3};  // claims metric 4 is true; it is on the boundary
    CHECK_THROWS_AS(truth_flags(sub, panel), ValidationError);
}

TEST_CASE("allocation split") {
    auto s = split_allocation({1.0, 26656});
    CHECK(s.n_a == 13328);
    CHECK(s.n_b == 13328);

    s = split_allocation({1.0, 7});  // tie goes to group A
    CHECK(s.n_a == 4);
    CHECK(s.n_b == 3);

    s = split_allocation({2.0, 9});
    CHECK(s.n_a == 6);
    CHECK(s.n_b == 3);

    CHECK_THROWS_AS((split_allocation({1.0, 1})), ValidationError);
    CHECK_THROWS_AS((split_allocation({0.0, 10})), ValidationError);
}

TEST_CASE("allocation split always exhausts n") {
    for (double c : {0.5, 1.0, 2.0, 3.0}) {
        for (long n = 2; n <= 400; ++n) {
            const auto s = split_allocation({c, n});
            CHECK(s.n_a + s.n_b == n);
            CHECK(s.n_a >= 1);
            CHECK(s.n_b >= 1);
        }
    }
}

TEST_CASE("mixture validation") {
    const MetricPanel panel = superiority_panel();
    PsiMixture psi = build_psi_subsets(kExampleMarginals, 0.10, panel, {1});
    CHECK(psi.size() == 5);
    CHECK_NOTHROW(psi.validate(panel));

    // all-false scenario is rejected unless explicitly permitted
    Submodel trivial;
    trivial.params_a = construct_group(kExampleMarginals);
    trivial.params_b = trivial.params_a;
    trivial.false_set = {0, 1, 2, 3, 4};
    trivial.weight = 1.0;
    PsiMixture bad;
    bad.submodels = {trivial};
    CHECK_THROWS_AS(bad.validate(panel), ValidationError);
    CHECK_NOTHROW(bad.validate(panel, /*allow_trivial=*/true));
}
