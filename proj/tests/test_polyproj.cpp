#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "doctest.h"
#include "helpers.hpp"
#include "mlab/polyproj.hpp"

using namespace mlab;

TEST_SUITE("polyproj") {

TEST_CASE("space dimensions") {
    CHECK(polynomial_space_dim(1, 1) == 1);
    CHECK(polynomial_space_dim(1, 2) == 2);
    CHECK(polynomial_space_dim(2, 2) == 3);
    CHECK(polynomial_space_dim(2, 3) == 6);
    CHECK(polynomial_space_dim(3, 2) == 4);
    CHECK(polynomial_space_dim(3, 3) == 10);
}

TEST_CASE("bases are orthonormal") {
    const Grid g = make_grid(2, 1.0, 96);
    Ball b;
    b.center = {0.1, -0.2, 0.0};
    b.radius = 0.6;
    const Basis basis = orthonormal_basis(b, 3, g);
    REQUIRE(basis.functions.size() == 6);
    CHECK(basis.gram_residual < 1e-10);
    for (std::size_t i = 0; i < basis.functions.size(); ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            const double ip =
                ball_inner_product(basis.functions[i], basis.functions[j], b);
            CHECK(ip == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("degenerate balls are rejected") {
    const Grid g = make_grid(1, 1.0, 64);
    Ball tiny;
    // Two cells (+-h/2) cannot span the four monomials 1, x, x^2, x^3.
    tiny.radius = 1.2 * g.spacing();
    CHECK_THROWS_AS(orthonormal_basis(tiny, 3, g), std::runtime_error);
}

TEST_CASE("projection is idempotent") {
    const Grid g = make_grid(1, 1.0, 512);
    Ball b;
    b.radius = 0.7;
    const Basis basis = orthonormal_basis(b, 2, g);
    auto gen = testutil::rng(21);
    const GridFunction f = testutil::piecewise_constant(g, gen);
    const GridFunction pf = project(f, basis);
    const GridFunction ppf = project(pf, basis);
    for (std::size_t i : cells_in_ball(g, b)) {
        CHECK(ppf.values[i] == doctest::Approx(pf.values[i]).epsilon(1e-10));
    }
}

TEST_CASE("projection reproduces low-degree polynomials") {
    const Grid g = make_grid(2, 1.0, 96);
    Ball b;
    b.radius = 0.75;
    const Basis basis = orthonormal_basis(b, 2, g);
    Polynomial affine;  // 1 - 2x + 0.5y
    affine.terms.push_back({{0, 0, 0}, 1.0});
    affine.terms.push_back({{1, 0, 0}, -2.0});
    affine.terms.push_back({{0, 1, 0}, 0.5});
    const GridFunction f = sample(FunctionSpec{affine}, g);
    const GridFunction pf = project(f, basis);
    for (std::size_t i : cells_in_ball(g, b)) {
        CHECK(pf.values[i] == doctest::Approx(f.values[i]).epsilon(1e-9));
    }
    // project_eval agrees off the lattice as well.
    const Point x{0.123, -0.321, 0.0};
    CHECK(project_eval(f, basis, x) ==
          doctest::Approx(eval(FunctionSpec{affine}, x, 2)).epsilon(1e-9));
}

TEST_CASE("projection is self-adjoint") {
    const Grid g = make_grid(1, 1.0, 256);
    Ball b;
    b.radius = 0.55;
    const Basis basis = orthonormal_basis(b, 2, g);
    auto gen = testutil::rng(22);
    const GridFunction f = testutil::piecewise_constant(g, gen);
    const GridFunction h = testutil::piecewise_constant(g, gen);
    const double left = ball_inner_product(project(f, basis), h, b);
    const double right = ball_inner_product(f, project(h, basis), b);
    CHECK(left == doctest::Approx(right).epsilon(1e-10));
}

TEST_CASE("the quadratic has best-approximation error 4/45") {
    // Projecting x^2 on (-1,1) onto affine functions leaves x^2 - 1/3, and
    // (1/2) * integral of (x^2 - 1/3)^2 = 4/45 under the normalized measure.
    const Grid g = make_grid(1, 1.0, 4096);
    Ball b;
    b.radius = 1.0;
    Polynomial sq;
    sq.terms.push_back({{2, 0, 0}, 1.0});
    const GridFunction f = sample(FunctionSpec{sq}, g);
    const double err = best_approx_error(f, b, 2, 2.0, g);
    CHECK(err * err == doctest::Approx(4.0 / 45.0).epsilon(1e-6));
}

TEST_CASE("projection beats random competitors in L2") {
    const Grid g = make_grid(1, 1.0, 512);
    Ball b;
    b.radius = 0.8;
    Gaussian spec;
    spec.width = 0.35;
    const GridFunction f = sample(FunctionSpec{spec}, g);
    const BestApproxReport rep = best_approx_report(f, b, 2, 2.0, g, 50, 424242);
    CHECK(rep.competitors == 50);
    CHECK(rep.optimal_within_suite);
    CHECK(rep.error <= rep.best_competitor_error * (1.0 + 1e-12));
}

}  // TEST_SUITE
