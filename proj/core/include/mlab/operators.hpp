#pragma once

#include "mlab/lattice.hpp"
#include "mlab/weights.hpp"

// The operator toolkit: Hardy-Littlewood and fractional maximal
// functions over finite ball families, the Riesz potential with a
// singularity-aware cell quadrature, exact derivative magnitudes of analytic
// test functions, and the local (weighted) Gagliardo seminorm.

namespace mlab {

// Quadrature policy for the kernel |x-y|^(alpha-n). The diagonal cell
// self-contribution integrates the kernel exactly over the ball of the same
// volume as a cell; pairs of cells closer than 2h are re-evaluated on
// subdivided cells (near_diagonal_refine per axis).
struct KernelQuadrature {
    double alpha = 0.5;  // in (0, n)
    int near_diagonal_refine = 4;
};

// At each cell, the max over family balls containing it of the discrete
// average of |f|. Throws a coverage error naming the first cell that lies in
// no family ball.
GridFunction maximal(const GridFunction& f, const BallFamily& family);

// As maximal, but each ball contributes r(B)^alpha times the average of |f|.
GridFunction fractional_maximal(const GridFunction& f, double alpha,
                                const BallFamily& family);

// Full-grid Riesz potential: out(x_i) = sum_j f(y_j) |x_i - y_j|^(alpha-n) h^n
// with the diagonal and near-diagonal rules of the quadrature policy. Direct
// summation via a precomputed offset-kernel table; cost O(cells^2).
GridFunction riesz(const GridFunction& f, const KernelQuadrature& quad);

// Riesz potential at one arbitrary target point (not necessarily a cell
// center). Source cells within 2h of the target are subdivided; a source
// cell centered exactly at the target uses the diagonal rule.
double riesz_at(const GridFunction& f, const KernelQuadrature& quad,
                const Point& x);

// Euclidean |grad f| at cell centers: exact for analytic specs (Bump gives
// exactly 1/eps on its transition annulus), centered finite differences with
// one-sided boundary stencils for sampled data.
GridFunction gradient_magnitude(const FunctionSpec& spec, const Grid& grid);

// sum over multi-indices |a| = m of |D^a f|, m in {1,2}. For m = 1 this is
// the l1 gradient norm (it coincides with gradient_magnitude in 1D). Specs
// without pointwise m-th derivatives (Bump/Cone at m = 2) are rejected.
GridFunction highorder_magnitude(const FunctionSpec& spec, int m,
                                 const Grid& grid);

// Angular mean of |cos theta|^p over the unit sphere in the given dimension
// (1, 2/pi-type integrals, 1/(p+1)); computed once per (p, dim) and cached.
double kappa_angular(double p, int dim);

// Local Gagliardo energy: double integral over the ball's cells of
// |f(x)-f(y)|^p / |x-y|^(n+delta*p). Pairs within 2h average the full
// product over subdivided cells (near the diagonal the kernel alone is not
// integrable); the residual identical-subcell band uses the local
// linearization closed form (needs the gradient, hence a FunctionSpec).
double gagliardo(const FunctionSpec& f, double p, double delta,
                 const Ball& ball, const Grid& grid,
                 int near_diagonal_refine = 4);

// As gagliardo, with the outer variable weighted by w(x) and the whole
// energy normalized by the discretized w(B).
double weighted_gagliardo(const FunctionSpec& f, double p, double delta,
                          const Ball& ball, const Weight& w, const Grid& grid,
                          int near_diagonal_refine = 4);

}  // namespace mlab
