#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include "doctest.h"
#include "helpers.hpp"
#include "mlab/lattice.hpp"

using namespace mlab;

TEST_SUITE("lattice") {

TEST_CASE("grid geometry") {
    const Grid g = make_grid(2, 1.0, 8);
    CHECK(g.spacing() == doctest::Approx(0.25));
    CHECK(g.cell_count() == 64);
    CHECK(g.cell_volume() == doctest::Approx(0.0625));
    // Centers are symmetric about the origin.
    CHECK(g.center_coord(0) == doctest::Approx(-g.center_coord(7)));

    const Grid g3 = make_grid(3, 2.0, 4);
    for (std::size_t flat = 0; flat < g3.cell_count(); ++flat) {
        CHECK(g3.flat_index(g3.multi_index(flat)) == flat);
    }
}

TEST_CASE("grid validation") {
    CHECK_THROWS_AS(make_grid(4, 1.0, 8), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(1, -1.0, 8), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(1, 1.0, 0), std::invalid_argument);
}

TEST_CASE("ball cell counting is exact for aligned radii") {
    // With N = 256 on [-1,1], h = 1/128 and the centers -1 + (k+1/2)h.
    // B(0, 1/2) holds exactly 128 cells, so the measure is exactly 1.
    const Grid g = make_grid(1, 1.0, 256);
    Ball b;
    b.radius = 0.5;
    CHECK(ball_cell_count(g, b) == 128);
    CHECK(ball_measure(g, b) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("run decomposition agrees with the cell list") {
    const Grid g = make_grid(2, 1.0, 32);
    Ball b;
    b.center = {0.21, -0.13, 0.0};
    b.radius = 0.57;
    std::size_t run_cells = 0;
    for_each_ball_run(g, b, [&](std::size_t, int count) { run_cells += count; });
    CHECK(run_cells == cells_in_ball(g, b).size());
    CHECK(run_cells == ball_cell_count(g, b));
}

TEST_CASE("strict membership in the sup metric") {
    // Cell centers on [-1,1] with N=4 sit at +-0.25, +-0.75. A sup-ball of
    // radius 0.75 about 0 must exclude the center exactly at distance 0.75.
    const Grid g = make_grid(1, 1.0, 4);
    Ball b;
    b.radius = 0.75;
    b.metric = Metric::sup;
    CHECK(ball_cell_count(g, b) == 2);
}

TEST_CASE("average of a constant is exact") {
    const Grid g = make_grid(2, 1.0, 64);
    const GridFunction one = constant_function(g, 3.75);
    Ball b;
    b.radius = 0.8;
    CHECK(average(one, b) == doctest::Approx(3.75).epsilon(1e-14));
}

TEST_CASE("midpoint quadrature is second order on aligned balls") {
    // B(0, 1/2) is resolved exactly at N = 128 and N = 256 (no partial
    // cells), so the only error is the midpoint rule's O(h^2).
    auto gauss_integral_error = [](int cells) {
        const Grid g = make_grid(1, 1.0, cells);
        Gaussian spec;
        spec.width = 0.5;
        const GridFunction f = sample(FunctionSpec{spec}, g);
        Ball b;
        b.radius = 0.5;
        // Exact: integral of exp(-x^2/(2 w^2)) over [-1/2, 1/2]
        //      = sqrt(2 pi) w erf(1/(2 sqrt(2) w)).
        const double w = spec.width;
        const double exact = std::sqrt(2.0 * M_PI) * w *
                             std::erf(0.5 / (std::sqrt(2.0) * w));
        return std::abs(integrate(f, b) - exact);
    };
    const double coarse = gauss_integral_error(128);
    const double fine = gauss_integral_error(256);
    CHECK(fine < coarse / 3.0);
}

TEST_CASE("integration is translation invariant on lattice shifts") {
    const Grid g = make_grid(1, 1.0, 256);
    const double shift = 0.25;  // exactly 32 cells
    Gaussian centered;
    centered.width = 0.2;
    Gaussian moved = centered;
    moved.center = {shift, 0.0, 0.0};
    Ball b0, b1;
    b0.radius = b1.radius = 0.3;
    b1.center = {shift, 0.0, 0.0};
    const double at_origin = integrate(sample(FunctionSpec{centered}, g), b0);
    const double shifted = integrate(sample(FunctionSpec{moved}, g), b1);
    CHECK(at_origin == doctest::Approx(shifted).epsilon(1e-13));
}

TEST_CASE("analytic specs evaluate exactly") {
    const int dim = 2;
    Bump bump;
    bump.eps = 0.1;
    CHECK(eval(FunctionSpec{bump}, {0.0, 0.0, 0.0}, dim) == 1.0);
    CHECK(eval(FunctionSpec{bump}, {0.15, 0.0, 0.0}, dim) ==
          doctest::Approx(0.5));
    CHECK(eval(FunctionSpec{bump}, {0.0, 0.25, 0.0}, dim) == 0.0);

    Cone cone;  // 1 - |x|
    CHECK(eval(FunctionSpec{cone}, {0.3, 0.4, 0.0}, dim) ==
          doctest::Approx(0.5));

    Polynomial poly;
    poly.terms.push_back({{2, 1, 0}, 2.0});  // 2 x^2 y
    CHECK(eval(FunctionSpec{poly}, {0.5, -1.0, 0.0}, dim) ==
          doctest::Approx(-0.5));
}

TEST_CASE("dilation rescales arguments") {
    Gaussian spec;
    spec.width = 0.3;
    const FunctionSpec doubled = dilated(FunctionSpec{spec}, 2.0);
    const Point x{0.17, -0.05, 0.0};
    const Point lx{0.34, -0.10, 0.0};
    CHECK(eval(doubled, lx, 2) ==
          doctest::Approx(eval(FunctionSpec{spec}, x, 2)).epsilon(1e-14));

    const Grid g = make_grid(1, 1.0, 16);
    SampledSpec sampled{constant_function(g, 1.0)};
    CHECK_THROWS_AS(dilated(FunctionSpec{sampled}, 2.0), std::invalid_argument);
}

TEST_CASE("ball family respects its ladder") {
    const Grid g = make_grid(1, 1.0, 64);
    const BallFamily fam = ball_family(g, std::pow(2.0, 0.25), 0.1, 1.0, 4);
    CHECK(!fam.balls.empty());
    for (const Ball& b : fam.balls) {
        CHECK(b.radius >= 0.1);
        CHECK(b.radius <= 1.0);
    }
    CHECK(fam.center_stride == 4);
    // Scaling the family scales every radius and center.
    const BallFamily big = scaled(fam, 2.0);
    CHECK(big.balls.front().radius ==
          doctest::Approx(2.0 * fam.balls.front().radius));
}

TEST_CASE("covering radius covers every cell") {
    const Grid g = make_grid(2, 1.0, 32);
    const int stride = 2;
    const double rho = covering_radius(g, stride, Metric::euclidean);
    const BallFamily fam =
        ball_family(g, std::pow(2.0, 0.25), rho, 2.0 * g.half_extent, stride);
    for (std::size_t i = 0; i < g.cell_count(); ++i) {
        const Point x = g.center(i);
        bool covered = false;
        for (const Ball& b : fam.balls) {
            if (b.contains(x, g.dim)) {
                covered = true;
                break;
            }
        }
        CHECK(covered);
    }
}

TEST_CASE("csv and binary serialization round-trip") {
    const Grid g = make_grid(2, 1.5, 12);
    auto gen = testutil::rng(101);
    const GridFunction f = testutil::piecewise_constant(g, gen);

    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "mlab_lattice_io";
    fs::create_directories(dir);

    const std::string csv = (dir / "f.csv").string();
    write_csv(f, csv);
    const GridFunction back = read_csv(csv);
    REQUIRE(back.grid.same_layout(f.grid));
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        CHECK(back.values[i] == doctest::Approx(f.values[i]).epsilon(1e-12));
    }

    const std::string bin = (dir / "f.bin").string();
    write_binary(f, bin);
    const GridFunction exact = read_binary(bin);
    REQUIRE(exact.grid.same_layout(f.grid));
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        CHECK(exact.values[i] == f.values[i]);
    }
}

}  // TEST_SUITE
