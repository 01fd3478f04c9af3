#pragma once

#include <cstdint>

#include "mlab/lattice.hpp"

// Orthonormal polynomial bases on balls under the normalized inner product
// <f,g>_B = (1/|B|) * integral over B of f*g, and the degree-(m-1)
// projection they induce. The projection is the L^2(B)-best polynomial
// approximation; for other exponents it is comparable to the best one.

namespace mlab {

struct Basis {
    Ball ball;
    int m = 1;  // polynomial degree bound is m-1
    Grid grid;
    // Orthonormalized monomials in graded lexicographic order, sampled on
    // the full grid (each is a polynomial, defined everywhere).
    std::vector<GridFunction> functions;
    // Monomial coefficients of each basis function, same monomial order.
    std::vector<std::vector<double>> coefficients;
    std::vector<std::array<int, 3>> monomials;
    double gram_residual = 0;  // max |<phi_i, phi_j> - delta_ij|
};

// Number of monomials of degree <= m-1 in the given dimension.
std::size_t polynomial_space_dim(int dim, int m);

// Modified Gram-Schmidt (with one reorthogonalization pass) over the
// monomials of degree <= m-1, m in {1,2,3}. Throws a degenerate-basis error
// when the ball holds too few cells to separate the monomials.
Basis orthonormal_basis(const Ball& ball, int m, const Grid& grid);

// <f,g>_B over the ball's cells (normalized by the discretized measure).
double ball_inner_product(const GridFunction& f, const GridFunction& g,
                          const Ball& ball);

// P_B^{m-1} f = sum_r <f,phi_r>_B phi_r, sampled on the basis grid.
GridFunction project(const GridFunction& f, const Basis& basis);

// The projection polynomial evaluated at an arbitrary point.
double project_eval(const GridFunction& f, const Basis& basis, const Point& x);

// Normalized L^p(B) error of f - P_B^{m-1} f.
double best_approx_error(const GridFunction& f, const Ball& ball, int m,
                         double p, const Grid& grid);

struct BestApproxReport {
    double error = 0;                  // projection error
    double best_competitor_error = 0;  // min over perturbed polynomials
    double ratio = 0;                  // error / best_competitor_error
    int competitors = 0;
    std::uint64_t seed = 0;
    bool optimal_within_suite = false;  // error <= every competitor's error
};

// Pits the projection against seeded random polynomial perturbations. At
// p = 2 the projection must win outright; at other p the ratio is reported
// as a comparability measure.
BestApproxReport best_approx_report(const GridFunction& f, const Ball& ball,
                                    int m, double p, const Grid& grid,
                                    int competitors = 50,
                                    std::uint64_t seed = 20240801);

}  // namespace mlab
