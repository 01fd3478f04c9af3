#include <cmath>
#include <cstddef>

#include "doctest.h"
#include "helpers.hpp"
#include "mlab/norms.hpp"

using namespace mlab;

namespace {

struct Setup {
    Grid grid = make_grid(1, 1.0, 512);
    Ball ball;
    GridFunction unit;

    Setup() : unit(constant_function(grid, 1.0)) { ball.radius = 0.8; }
};

}  // namespace

TEST_SUITE("norms") {

TEST_CASE("normalized averages are exact on constants") {
    Setup s;
    const GridFunction f = constant_function(s.grid, -4.0);
    for (double p : {1.0, 2.0, 3.5}) {
        CHECK(weighted_lp(f, p, s.ball, s.unit) ==
              doctest::Approx(4.0).epsilon(1e-13));
    }
}

TEST_CASE("norms are absolutely homogeneous") {
    Setup s;
    auto gen = testutil::rng(11);
    const GridFunction f = testutil::piecewise_constant(s.grid, gen);
    GridFunction cf = f;
    for (double& v : cf.values) v *= -7.5;
    CHECK(weighted_lp(cf, 2.0, s.ball, s.unit) ==
          doctest::Approx(7.5 * weighted_lp(f, 2.0, s.ball, s.unit))
              .epsilon(1e-12));
    CHECK(lorentz_weak(cf, 2.0, s.ball, s.unit) ==
          doctest::Approx(7.5 * lorentz_weak(f, 2.0, s.ball, s.unit))
              .epsilon(1e-12));
    CHECK(lorentz(cf, 2.0, 1.0, s.ball, s.unit) ==
          doctest::Approx(7.5 * lorentz(f, 2.0, 1.0, s.ball, s.unit))
              .epsilon(1e-12));
}

TEST_CASE("normalized averages increase with the exponent") {
    Setup s;
    auto gen = testutil::rng(12);
    for (int trial = 0; trial < 5; ++trial) {
        const GridFunction f = testutil::piecewise_constant(s.grid, gen);
        const double l1 = weighted_lp(f, 1.0, s.ball, s.unit);
        const double l2 = weighted_lp(f, 2.0, s.ball, s.unit);
        const double l4 = weighted_lp(f, 4.0, s.ball, s.unit);
        CHECK(l1 <= l2 * (1.0 + 1e-12));
        CHECK(l2 <= l4 * (1.0 + 1e-12));
    }
}

TEST_CASE("diagonal Lorentz norms reproduce the plain norms") {
    Setup s;
    auto gen = testutil::rng(13);
    const Weight w = power_weight(1, 1.5);
    for (int trial = 0; trial < 20; ++trial) {
        const GridFunction f = testutil::piecewise_constant(s.grid, gen);
        for (double a : {1.0, 1.5, 2.0}) {
            const double diag = lorentz(f, a, a, s.ball, w);
            const double plain = weighted_lp(f, a, s.ball, w);
            CHECK(diag == doctest::Approx(plain).epsilon(1e-10));
        }
    }
}

TEST_CASE("weak norm is dominated by every Lorentz norm") {
    // ||f||_{a,inf} <= (b/a)^(1/b) ||f||_{a,b} and ||f||_{a,inf} <= ||f||_a.
    Setup s;
    auto gen = testutil::rng(14);
    for (int trial = 0; trial < 20; ++trial) {
        const GridFunction f = testutil::piecewise_constant(s.grid, gen);
        for (double a : {1.5, 2.0}) {
            const double weak = lorentz_weak(f, a, s.ball, s.unit);
            CHECK(weak <= weighted_lp(f, a, s.ball, s.unit) * (1.0 + 1e-12));
            for (double b : {1.0, a}) {
                const double bound = std::pow(b / a, 1.0 / b) *
                                     lorentz(f, a, b, s.ball, s.unit);
                CHECK(weak <= bound * (1.0 + 1e-12));
            }
        }
    }
}

TEST_CASE("indicator functions have closed-form Lorentz norms") {
    // For f = chi_E: ||f||_{a,b} = (a/b)^(1/b) m^(1/a) with m the normalized
    // mass of E, and the weak norm is m^(1/a).
    Setup s;
    const Weight w = power_weight(1, 1.5);
    const GridFunction wg = discretize(w, s.grid);
    GridFunction f = constant_function(s.grid, 0.0);
    double mass_e = 0.0, mass_b = 0.0;
    Ball inner;
    inner.radius = 0.3;
    for (std::size_t i : cells_in_ball(s.grid, s.ball)) {
        mass_b += wg.values[i];
    }
    for (std::size_t i : cells_in_ball(s.grid, inner)) {
        f.values[i] = 1.0;
        mass_e += wg.values[i];
    }
    const double m = mass_e / mass_b;
    for (double a : {1.5, 2.0}) {
        for (double b : {1.0, 2.0, 3.0}) {
            CHECK(lorentz(f, a, b, s.ball, wg) ==
                  doctest::Approx(std::pow(a / b, 1.0 / b) * std::pow(m, 1.0 / a))
                      .epsilon(1e-10));
        }
        CHECK(lorentz_weak(f, a, s.ball, wg) ==
              doctest::Approx(std::pow(m, 1.0 / a)).epsilon(1e-10));
    }
}

TEST_CASE("distribution function on a hand example") {
    // Four cells with values 3, 1, 1, 0 and equal weights inside the ball:
    // mass(> 0) = 3/4, mass(> 1) = 1/4, mass(> 3) = 0.
    const Grid g = make_grid(1, 1.0, 4);
    GridFunction f{g, {3.0, 1.0, 1.0, 0.0}};
    const GridFunction unit = constant_function(g, 1.0);
    Ball all;
    all.radius = 2.0;
    const DistributionFunction dist = distribution(f, all, unit);
    REQUIRE(dist.thresholds.size() == 3);
    CHECK(dist.thresholds[0] == 0.0);
    CHECK(dist.masses[0] == doctest::Approx(0.75));
    CHECK(dist.thresholds[1] == 1.0);
    CHECK(dist.masses[1] == doctest::Approx(0.25));
    CHECK(dist.thresholds[2] == 3.0);
    CHECK(dist.masses[2] == doctest::Approx(0.0));

    // L^1 via the layer cake: integral of mass(>t) dt
    //   = 0.75 * 1 + 0.25 * 2 = 1.25 = average of f.
    CHECK(weighted_lp(f, 1.0, all, unit) == doctest::Approx(1.25));
    // Weak L^2: sup over t of t * mass(>= t)^(1/2) = max(1 * sqrt(3)/2,
    // 3 * 1/2) = 1.5.
    CHECK(lorentz_weak(f, 2.0, all, unit) == doctest::Approx(1.5));
}

TEST_CASE("power-weight overloads agree with discretized weights") {
    Setup s;
    auto gen = testutil::rng(15);
    const GridFunction f = testutil::piecewise_constant(s.grid, gen);
    const Weight w = power_weight(1, 0.5);
    const GridFunction wg = discretize(w, s.grid);
    CHECK(weighted_lp(f, 2.0, s.ball, w) ==
          doctest::Approx(weighted_lp(f, 2.0, s.ball, wg)).epsilon(1e-12));
    CHECK(lorentz_weak(f, 2.0, s.ball, w) ==
          doctest::Approx(lorentz_weak(f, 2.0, s.ball, wg)).epsilon(1e-12));
    CHECK(lorentz(f, 2.0, 1.0, s.ball, w) ==
          doctest::Approx(lorentz(f, 2.0, 1.0, s.ball, wg)).epsilon(1e-12));
}

}  // TEST_SUITE
