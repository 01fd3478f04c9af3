#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "helpers.hpp"
#include "mlab/experiments.hpp"

using namespace mlab;

namespace {

double extra_value(const VerificationReport& rep, const std::string& key) {
    for (const auto& [k, v] : rep.extra) {
        if (k == key) return v;
    }
    FAIL("missing extra field: ", key);
    return 0.0;
}

double param_value(const VerificationReport& rep, const std::string& key) {
    for (const auto& [k, v] : rep.params) {
        if (k == key) return v;
    }
    FAIL("missing param field: ", key);
    return 0.0;
}

}  // namespace

TEST_SUITE("experiments") {

TEST_CASE("coverage families cover the whole grid") {
    const Grid g = make_grid(2, 1.0, 48);
    const BallFamily fam = coverage_family(g, 2);
    // A_1 estimation requires every cell inside some ball; it must not throw.
    const GridFunction one = constant_function(g, 1.0);
    CHECK(a1_constant(one, fam) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("first-order check passes and is dilation invariant") {
    const Grid g = make_grid(2, 1.0, 96);
    Bump spec;
    spec.eps = 0.1;
    Ball b;
    b.radius = 0.5;
    const VerificationReport rep = poincare_check(
        FunctionSpec{spec}, power_weight(2, 1.0), 1.0, 1.0, b, g,
        PoincareMode::strong);
    CHECK(rep.pass);
    CHECK(rep.implied_constant > 0.0);
    CHECK(param_value(rep, "q") == doctest::Approx(2.0));
    CHECK(extra_value(rep, "dilation_deviation") ==
          doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("first-order check rejects out-of-range parameters") {
    const Grid g1 = make_grid(1, 1.0, 64);
    Bump spec;
    Ball b;
    b.radius = 0.5;
    // Dimension 1 is below the stated range.
    CHECK_THROWS_AS(poincare_check(FunctionSpec{spec}, power_weight(1, 1.0),
                                   1.0, 1.0, b, g1, PoincareMode::strong),
                    std::invalid_argument);
    const Grid g2 = make_grid(2, 1.0, 32);
    // p beyond n is rejected as well.
    CHECK_THROWS_AS(poincare_check(FunctionSpec{spec}, power_weight(2, 2.0),
                                   1.0, 2.5, b, g2, PoincareMode::strong),
                    std::invalid_argument);
}

TEST_CASE("weak and Lorentz modes never exceed the strong mode") {
    const Grid g = make_grid(2, 1.0, 64);
    Gaussian spec;
    spec.width = 0.2;
    Ball b;
    b.radius = 0.6;
    const Weight w = power_weight(2, 2.0);
    CheckOptions opt;
    opt.dilation_probe = false;
    const auto strong = poincare_check(FunctionSpec{spec}, w, 1.0, 1.0, b, g,
                                       PoincareMode::strong, opt);
    const auto weak = poincare_check(FunctionSpec{spec}, w, 1.0, 1.0, b, g,
                                     PoincareMode::weak, opt);
    CHECK(strong.pass);
    CHECK(weak.pass);
    CHECK(weak.lhs <= strong.lhs * (1.0 + 1e-12));
}

TEST_CASE("Riesz strong check runs in plain and improved variants") {
    const Grid g = make_grid(1, 1.0, 512);
    Gaussian spec;
    spec.width = 0.15;
    Ball b;
    b.radius = 0.5;
    const Weight w = power_weight(1, 1.0);
    CheckOptions opt;
    opt.dilation_probe = false;

    const auto improved =
        riesz_strong_check(FunctionSpec{spec}, w, 1.0, 0.5, 1.5, b, g, opt);
    CHECK(improved.pass);
    CHECK(improved.experiment_id == "riesz_strong");

    CheckOptions plain_opt = opt;
    plain_opt.plain = true;
    // plain variant requires r < p strictly.
    const auto plain = riesz_strong_check(FunctionSpec{spec}, w, 1.2, 0.5, 1.5,
                                          b, g, plain_opt);
    CHECK(plain.pass);
    CHECK(plain.experiment_id == "riesz_strong_plain");
    CHECK_THROWS_AS(riesz_strong_check(FunctionSpec{spec}, w, 1.5, 0.5, 1.5, b,
                                       g, plain_opt),
                    std::invalid_argument);
}

TEST_CASE("Riesz weak check reaches p = 1") {
    const Grid g = make_grid(1, 1.0, 512);
    Bump spec;
    spec.eps = 0.1;
    Ball b;
    b.radius = 0.5;
    CheckOptions opt;
    opt.dilation_probe = false;
    const auto rep = riesz_weak_check(FunctionSpec{spec}, power_weight(1, 1.0),
                                      1.0, 0.5, 1.0, b, g, opt);
    CHECK(rep.pass);
    CHECK(rep.lhs > 0.0);
    CHECK(rep.implied_constant > 0.0);
}

TEST_CASE("pointwise domination by the maximal function") {
    const Grid g = make_grid(1, 1.0, 512);
    Gaussian spec;
    spec.width = 0.2;
    Ball b;
    b.radius = 0.5;
    CheckOptions opt;
    opt.dilation_probe = false;
    const auto rep = hedberg_check(FunctionSpec{spec}, power_weight(1, 1.0),
                                   1.2, 0.5, 1.5, b, g, opt);
    CHECK(rep.pass);
    CHECK(rep.implied_constant > 0.0);
    // q comes from the plain relation 1/q = 1/p - (alpha/n)(1/r).
    const double q = param_value(rep, "q");
    CHECK(1.0 / q ==
          doctest::Approx(1.0 / 1.5 - 0.5 * (1.0 / 1.2)).epsilon(1e-12));
}

TEST_CASE("fractional check reports the one-exponent comparison for w = 1") {
    const Grid g = make_grid(1, 1.0, 1024);
    Polynomial lin;
    lin.terms.push_back({{1, 0, 0}, 1.0});
    Ball b;
    b.radius = 1.0;
    CheckOptions opt;
    opt.dilation_probe = false;
    opt.rep_probe = false;
    const double delta = 0.5;
    const auto rep = fractional_poincare_check(
        FunctionSpec{lin}, power_weight(1, 1.0), 1.0, delta, b, g, opt);
    CHECK(rep.pass);
    // Implied constant of the unweighted comparison: (2-d) 2^(d-3).
    const double implied = extra_value(rep, "bbm_implied_constant");
    const double oracle = (2.0 - delta) * std::pow(2.0, delta - 3.0);
    CHECK(implied == doctest::Approx(oracle).epsilon(0.05));
}

TEST_CASE("fractional check with a nontrivial weight needs dimension 2") {
    const Grid g = make_grid(1, 1.0, 256);
    Polynomial lin;
    lin.terms.push_back({{1, 0, 0}, 1.0});
    Ball b;
    b.radius = 0.5;
    CHECK_THROWS_AS(
        fractional_poincare_check(FunctionSpec{lin}, power_weight(1, 0.5), 1.0,
                                  0.5, b, g),
        std::invalid_argument);
}

TEST_CASE("pointwise representation probe stays bounded") {
    const Grid g = make_grid(1, 1.0, 512);
    Gaussian spec;
    spec.width = 0.3;
    Ball b;
    b.radius = 0.8;
    CheckOptions opt;
    opt.dilation_probe = false;
    // delta * p must stay below the dimension.
    const auto rep = fractional_poincare_check(
        FunctionSpec{spec}, power_weight(1, 1.0), 1.5, 0.6, b, g, opt);
    CHECK(rep.pass);
    CHECK(extra_value(rep, "rep_implied_constant") > 0.0);
}

TEST_CASE("subrepresentation ratios are finite at both orders") {
    const Grid g = make_grid(2, 1.0, 96);
    Cone cone;  // 1 - |x|, kink at the apex
    Ball b;
    b.radius = 0.45;
    const auto rep1 = subrepresentation_check(FunctionSpec{cone}, b, g, 1);
    CHECK(rep1.pass);
    CHECK(rep1.implied_constant > 0.0);

    // Order two needs the kernel exponent m - n < 0, hence dimension 3.
    const Grid g3 = make_grid(3, 1.0, 32);
    Polynomial cubic;
    cubic.terms.push_back({{2, 1, 0}, 1.0});
    const auto rep2 = subrepresentation_check(FunctionSpec{cubic}, b, g3, 2);
    CHECK(rep2.pass);
    CHECK(rep2.implied_constant > 0.0);
}

TEST_CASE("subrepresentation of a reproduced polynomial is trivial") {
    // At m = 1 the subtracted projection is the ball average, so a constant
    // function is the degree-(m-1) polynomial reproduced exactly.
    const Grid g = make_grid(2, 1.0, 64);
    Polynomial constant;
    constant.terms.push_back({{0, 0, 0}, 2.0});
    Ball b;
    b.radius = 0.5;
    const auto rep = subrepresentation_check(FunctionSpec{constant}, b, g, 1);
    CHECK(rep.pass);
    bool noted = false;
    for (const auto& note : rep.notes) {
        if (note.find("vanishes identically") != std::string::npos) noted = true;
    }
    CHECK(noted);
}

TEST_CASE("high-order check at order two") {
    const Grid g = make_grid(3, 1.0, 24);
    Gaussian spec;
    spec.width = 0.4;
    Ball b;
    b.radius = 0.6;
    CheckOptions opt;
    opt.dilation_probe = false;
    const auto strong = highorder_check(FunctionSpec{spec}, power_weight(3, 3.0),
                                        1.0, 1.2, 2, b, g,
                                        HighOrderMode::strong, opt);
    CHECK(strong.pass);
    // q = p*_m = np/(n - mp): 3*1.2 / (3 - 2.4) = 6.
    CHECK(param_value(strong, "q") == doctest::Approx(6.0).epsilon(1e-12));

    const auto weak = highorder_check(FunctionSpec{spec}, power_weight(3, 3.0),
                                      1.0, 1.0, 2, b, g, HighOrderMode::weak,
                                      opt);
    CHECK(weak.pass);
    // strong mode refuses p = 1; the weak mode reaches it.
    CHECK_THROWS_AS(highorder_check(FunctionSpec{spec}, power_weight(3, 3.0),
                                    1.0, 1.0, 2, b, g, HighOrderMode::strong,
                                    opt),
                    std::invalid_argument);
}

TEST_CASE("sharpness sweep recovers the designed growth rates") {
    const std::vector<double> ladder{0.05, 0.025, 0.0125, 0.00625};
    // gamma chosen through q = 8 gives slope 1/8.
    const double gamma = sharpness_gamma(2, 2.0, 3.0, 8.0);
    const SweepReport rep = sharpness_sweep(2, 2.0, 3.0, gamma, ladder);
    CHECK(rep.pass);
    CHECK(!rep.inconclusive);
    CHECK(rep.fitted_slope == doctest::Approx(0.125).epsilon(0.1));
    REQUIRE(rep.predicted_slope.has_value());
    CHECK(*rep.predicted_slope == doctest::Approx(0.125).epsilon(1e-12));

    // At the natural exponent the constant is flat.
    const double gamma_flat = sharpness_gamma(2, 2.0, 3.0, 6.0);
    const SweepReport flat = sharpness_sweep(2, 2.0, 3.0, gamma_flat, ladder);
    CHECK(std::abs(flat.fitted_slope) < 0.02);

    // Below it the constant decays.
    const double gamma_neg = sharpness_gamma(2, 2.0, 3.0, 5.0);
    const SweepReport neg = sharpness_sweep(2, 2.0, 3.0, gamma_neg, ladder);
    CHECK(neg.fitted_slope < -0.05);
}

TEST_CASE("sharpness sweep validates its ladder") {
    const double gamma = sharpness_gamma(2, 2.0, 3.0, 8.0);
    CHECK_THROWS_AS(sharpness_sweep(2, 2.0, 3.0, gamma, {0.1, 0.05, 0.025}),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        sharpness_sweep(2, 2.0, 3.0, gamma, {0.7, 0.3, 0.1, 0.05}),
        std::invalid_argument);
}

TEST_CASE("weight-axis sweep estimates the exponent 1/p") {
    const std::vector<double> deltas{0.16, 0.04, 0.01, 0.0025, 0.000625};
    const std::vector<double> epss{0.05, 0.1, 0.2, 0.35};
    const SweepReport rep = sharpness_beta_sweep(2, 2.0, 2.0, deltas, epss);
    CHECK(rep.pass);
    CHECK(rep.fitted_slope >= 0.5 - 0.05);
    CHECK(rep.fitted_slope == doctest::Approx(0.5).epsilon(0.05));

    // Negative control: dividing out a smaller power leaves growth behind.
    const SweepReport control =
        sharpness_beta_sweep(2, 2.0, 2.0, deltas, epss, 1.0 / 4.0);
    double growth = 0.0;
    for (const auto& [k, v] : control.extra) {
        if (k == "growth_ratio") growth = v;
    }
    CHECK(growth >= 3.0);
}

TEST_CASE("vanishing lemma bound holds on seeded trials") {
    auto gen = testutil::rng(77);
    std::uniform_real_distribution<double> value(-2.0, 2.0);
    std::uniform_real_distribution<double> weight(0.5, 1.5);
    for (int trial = 0; trial < 50; ++trial) {
        const int size = 64;
        std::vector<double> f(size), mu(size);
        std::vector<bool> mask(size);
        for (int i = 0; i < size; ++i) {
            mask[i] = (i % 3 == trial % 3);
            f[i] = mask[i] ? 0.0 : value(gen);
            mu[i] = weight(gen);
        }
        const auto rep = vanishing_lemma_check(f, mask, 2.0, mu);
        CHECK(rep.pass);
        CHECK(rep.lhs <= rep.rhs_core * (1.0 + 1e-9));
    }
}

TEST_CASE("vanishing lemma rejects inconsistent masks") {
    std::vector<double> f{1.0, 0.5, 0.0, 0.0};
    std::vector<bool> mask{true, false, true, true};  // f != 0 on the mask
    std::vector<double> mu{1.0, 1.0, 1.0, 1.0};
    CHECK_THROWS_AS(vanishing_lemma_check(f, mask, 2.0, mu),
                    std::invalid_argument);
}

TEST_CASE("maximal operator norm probe stays within its budget") {
    const Grid g = make_grid(1, 1.0, 512);
    const BallFamily fam = coverage_family(g, 2);
    std::vector<FunctionSpec> suite;
    Bump bump;
    bump.eps = 0.15;
    suite.push_back(bump);
    Gaussian gauss;
    gauss.width = 0.25;
    suite.push_back(gauss);
    const auto rep =
        maximal_norm_probe(power_weight(1, 1.0), 1.0, 2.0, fam, suite, g);
    CHECK(rep.pass);
    // Averaging cannot shrink these positive profiles much, and the probe is
    // a lower bound on the operator-norm constant, so the implied constant
    // sits in a sane band around 1.
    CHECK(rep.lhs > 0.9);
    CHECK(rep.implied_constant > 0.3);
    CHECK(rep.implied_constant < 3.0);
    CHECK(extra_value(rep, "buckley_core") > 0.0);
}

}  // TEST_SUITE
