#include "mlab/polyproj.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace mlab {

namespace {

std::vector<std::array<int, 3>> graded_lex_monomials(int dim, int m) {
    std::vector<std::array<int, 3>> out;
    for (int deg = 0; deg <= m - 1; ++deg) {
        if (dim == 1) {
            out.push_back({deg, 0, 0});
            continue;
        }
        for (int e0 = deg; e0 >= 0; --e0) {
            if (dim == 2) {
                out.push_back({e0, deg - e0, 0});
                continue;
            }
            for (int e1 = deg - e0; e1 >= 0; --e1)
                out.push_back({e0, e1, deg - e0 - e1});
        }
    }
    return out;
}

GridFunction sample_monomial(const Grid& grid, const std::array<int, 3>& expo) {
    GridFunction f{grid, std::vector<double>(grid.cell_count())};
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        const Point x = grid.center(i);
        double v = 1;
        for (int ax = 0; ax < grid.dim; ++ax)
            for (int e = 0; e < expo[ax]; ++e) v *= x[ax];
        f.values[i] = v;
    }
    return f;
}

double monomial_eval(const std::array<int, 3>& expo, const Point& x, int dim) {
    double v = 1;
    for (int ax = 0; ax < dim; ++ax)
        for (int e = 0; e < expo[ax]; ++e) v *= x[ax];
    return v;
}

}  // namespace

std::size_t polynomial_space_dim(int dim, int m) {
    return graded_lex_monomials(dim, m).size();
}

double ball_inner_product(const GridFunction& f, const GridFunction& g,
                          const Ball& ball) {
    if (!f.grid.same_layout(g.grid))
        throw std::invalid_argument("ball_inner_product: grid mismatch");
    double acc = 0;
    std::size_t count = 0;
    for_each_ball_run(f.grid, ball, [&](std::size_t start, int n) {
        for (int k = 0; k < n; ++k)
            acc += f.values[start + k] * g.values[start + k];
        count += n;
    });
    if (count == 0)
        throw std::runtime_error(
            "ball_inner_product: empty region (no cell center inside ball)");
    return acc / static_cast<double>(count);
}

Basis orthonormal_basis(const Ball& ball, int m, const Grid& grid) {
    if (m < 1 || m > 3)
        throw std::invalid_argument("orthonormal_basis: m must be 1, 2 or 3");

    Basis basis;
    basis.ball = ball;
    basis.m = m;
    basis.grid = grid;
    basis.monomials = graded_lex_monomials(grid.dim, m);

    const std::size_t want = basis.monomials.size();
    if (ball_cell_count(grid, ball) < want)
        throw std::runtime_error(
            "orthonormal_basis: degenerate basis (ball holds fewer cells than "
            "monomials: need " + std::to_string(want) + ")");

    for (std::size_t k = 0; k < want; ++k) {
        GridFunction v = sample_monomial(grid, basis.monomials[k]);
        std::vector<double> coeff(want, 0.0);
        coeff[k] = 1.0;

        const double initial = std::sqrt(ball_inner_product(v, v, ball));
        // Modified Gram-Schmidt, then one reorthogonalization sweep to keep
        // the Gram residual near rounding error.
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t j = 0; j < basis.functions.size(); ++j) {
                const double c = ball_inner_product(v, basis.functions[j], ball);
                for (std::size_t i = 0; i < v.values.size(); ++i)
                    v.values[i] -= c * basis.functions[j].values[i];
                for (std::size_t i = 0; i < want; ++i)
                    coeff[i] -= c * basis.coefficients[j][i];
            }
        }
        const double norm = std::sqrt(ball_inner_product(v, v, ball));
        if (!(norm > 1e-10 * (initial + 1.0)))
            throw std::runtime_error(
                "orthonormal_basis: degenerate basis (monomial " +
                std::to_string(k) + " is numerically dependent on the span)");
        for (auto& val : v.values) val /= norm;
        for (auto& c : coeff) c /= norm;
        basis.functions.push_back(std::move(v));
        basis.coefficients.push_back(std::move(coeff));
    }

    basis.gram_residual = 0;
    for (std::size_t i = 0; i < want; ++i)
        for (std::size_t j = i; j < want; ++j) {
            const double g =
                ball_inner_product(basis.functions[i], basis.functions[j], ball);
            basis.gram_residual =
                std::max(basis.gram_residual, std::fabs(g - (i == j ? 1.0 : 0.0)));
        }
    return basis;
}

GridFunction project(const GridFunction& f, const Basis& basis) {
    if (!f.grid.same_layout(basis.grid))
        throw std::invalid_argument("project: function grid does not match basis grid");
    GridFunction out{f.grid, std::vector<double>(f.grid.cell_count(), 0.0)};
    for (std::size_t r = 0; r < basis.functions.size(); ++r) {
        const double c = ball_inner_product(f, basis.functions[r], basis.ball);
        for (std::size_t i = 0; i < out.values.size(); ++i)
            out.values[i] += c * basis.functions[r].values[i];
    }
    return out;
}

double project_eval(const GridFunction& f, const Basis& basis, const Point& x) {
    if (!f.grid.same_layout(basis.grid))
        throw std::invalid_argument("project_eval: function grid does not match basis grid");
    double acc = 0;
    for (std::size_t r = 0; r < basis.functions.size(); ++r) {
        const double c = ball_inner_product(f, basis.functions[r], basis.ball);
        double phi = 0;
        for (std::size_t i = 0; i < basis.monomials.size(); ++i)
            phi += basis.coefficients[r][i] *
                   monomial_eval(basis.monomials[i], x, basis.grid.dim);
        acc += c * phi;
    }
    return acc;
}

namespace {

double normalized_lp_error(const GridFunction& f, const GridFunction& g,
                           const Ball& ball, double p) {
    double acc = 0;
    std::size_t count = 0;
    for_each_ball_run(f.grid, ball, [&](std::size_t start, int n) {
        for (int k = 0; k < n; ++k) {
            acc += std::pow(std::fabs(f.values[start + k] - g.values[start + k]), p);
            count += 1;
        }
    });
    if (count == 0)
        throw std::runtime_error("best_approx_error: empty region");
    return std::pow(acc / static_cast<double>(count), 1.0 / p);
}

}  // namespace

double best_approx_error(const GridFunction& f, const Ball& ball, int m,
                         double p, const Grid& grid) {
    if (!(p >= 1))
        throw std::invalid_argument("best_approx_error: p must be >= 1");
    if (!f.grid.same_layout(grid))
        throw std::invalid_argument("best_approx_error: grid mismatch");
    const Basis basis = orthonormal_basis(ball, m, grid);
    return normalized_lp_error(f, project(f, basis), ball, p);
}

BestApproxReport best_approx_report(const GridFunction& f, const Ball& ball,
                                    int m, double p, const Grid& grid,
                                    int competitors, std::uint64_t seed) {
    if (!(p >= 1))
        throw std::invalid_argument("best_approx_report: p must be >= 1");
    if (!f.grid.same_layout(grid))
        throw std::invalid_argument("best_approx_report: grid mismatch");

    const Basis basis = orthonormal_basis(ball, m, grid);
    const GridFunction proj = project(f, basis);

    BestApproxReport report;
    report.error = normalized_lp_error(f, proj, ball, p);
    report.competitors = competitors;
    report.seed = seed;

    // Perturbation scale tied to the achieved error so competitors probe the
    // neighborhood of the optimum rather than wandering far away.
    const double scale = report.error > 0 ? report.error : 1.0;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);

    double best_other = std::numeric_limits<double>::infinity();
    bool all_beaten = true;
    for (int c = 0; c < competitors; ++c) {
        GridFunction candidate = proj;
        for (const auto& phi : basis.functions) {
            const double delta = scale * unit(rng);
            for (std::size_t i = 0; i < candidate.values.size(); ++i)
                candidate.values[i] += delta * phi.values[i];
        }
        const double err = normalized_lp_error(f, candidate, ball, p);
        best_other = std::min(best_other, err);
        if (err < report.error) all_beaten = false;
    }
    report.best_competitor_error = best_other;
    report.ratio = best_other > 0 ? report.error / best_other : 1.0;
    report.optimal_within_suite = all_beaten;
    return report;
}

}  // namespace mlab
