#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "mlab/lattice.hpp"

// Muckenhoupt machinery: the constants [w]_{A_p}, [w]_{A_1} and the
// Fujii-Wilson [w]_{A_inf}, dual weights, the integrability index ell_w,
// weighted Sobolev exponents, the sharp reverse Holder inequality and the
// precise open property. All suprema are taken over finite ball families,
// so every estimate is a certified lower bound for the true constant.

namespace mlab {

// w(x) = |x|^(delta - n). Origin-centered Euclidean balls have the exact
// mass w(B(0,R)) = omega_{n-1} R^delta / delta.
struct AnalyticPower {
    double delta = 1.0;
};

// Positive samples on a grid, extended by nearest-cell lookup.
struct GridSampled {
    GridFunction data;
};

struct Weight {
    int dim = 1;
    std::variant<AnalyticPower, GridSampled> form;
};

Weight power_weight(int dim, double delta);
Weight sampled_weight(GridFunction data);

// Surface measure of the unit sphere S^{n-1}: 2, 2*pi, 4*pi.
double sphere_measure(int dim);
// Volume of the unit ball: 2, pi, 4*pi/3.
double unit_ball_volume(int dim);

double eval(const Weight& w, const Point& x);

// Samples the weight at cell centers. Throws invalid-argument if any value
// is nonpositive or non-finite (e.g. a singular power weight evaluated at a
// cell center sitting exactly on the origin).
GridFunction discretize(const Weight& w, const Grid& grid);

// Mass w(B). AnalyticPower over an origin-centered Euclidean ball (any ball
// in 1D) uses the exact closed form; GridSampled integrates its samples.
// The grid overload covers the remaining case: analytic weight, off-center
// ball, evaluated by midpoint quadrature.
double weight_mass(const Weight& w, const Ball& ball);
double weight_mass(const Weight& w, const Ball& ball, const Grid& grid);

// sigma = w^(1 - r'), r > 1. AnalyticPower stays analytic:
// delta_sigma - n = (delta - n)(1 - r').
Weight dual_weight(const Weight& w, double r);

double conjugate_exponent(double p);

// ---------------------------------------------------------------------------
// Integrability index and weighted Sobolev exponents.

struct EllProbe {
    double r = 0;                 // candidate exponent
    double constant = 0;          // A_r estimate on the working grid
    double refined_constant = 0;  // same family, one grid refinement
    bool admissible = false;      // both estimates below the cap
};

struct EllResult {
    double value = 1;
    bool exact = false;
    std::vector<EllProbe> trace;  // bisection history (empty when exact)
};

// ell_w = inf { r >= 1 : w is an A_r weight }. Exact for AnalyticPower:
// max(delta/n, 1). GridSampled weights are probed by bisection against a
// finiteness cap, re-checked under one grid refinement, and flagged
// approximate.
EllResult ell_w(const Weight& w);
EllResult ell_w(const Weight& w, const BallFamily& family, double cap = 1e6,
                double r_hi = 8.0, int bisection_steps = 20);

// p*_w from 1/p - 1/p*_w = 1/(n*ell); ell = 1 gives the classical np/(n-p).
double sobolev_exponent_pstar_w(int n, double p, double ell);

// Shared inputs of the exponent relations q_r.
struct ExponentContext {
    int n = 1;
    double alpha = 0.5;      // order of the potential, 0 < alpha < n
    double p = 1;            // 1 <= r <= p < n/alpha
    double r = 1;
    double tau = 4;          // 2^(n+1)
    double ainf_sigma = 1;   // A_inf estimate for the dual weight
};

ExponentContext make_exponent_context(int n, double alpha, double p, double r,
                                      double ainf_sigma);

// q_r from 1/p - 1/q_r = (alpha/n) * (1/r).
double exponent_qr_plain(const ExponentContext& ctx);

// q_r from 1/p - 1/q_r = (alpha/n) * tau*a / (1 + r*(tau*a - 1)) with
// a = ainf_sigma; requires r > 1 and gives a strictly larger q than the
// plain relation whenever a is finite.
double exponent_qr_improved(const ExponentContext& ctx);

// ---------------------------------------------------------------------------
// Estimators over a discretized weight. Empty balls (no cell center inside)
// are skipped; families built by ball_family with r_min >= spacing never
// produce one.

// Per-row prefix sums: O(#rows of B) ball sums instead of O(#cells of B).
struct RowPrefix {
    Grid grid;
    std::vector<double> pref;  // cells_per_axis + 1 entries per row

    explicit RowPrefix(const GridFunction& f);

    // Sum of samples over the cells of the ball (multiply by h^dim for the
    // integral).
    double ball_sum(const Ball& ball) const;
    // Sum of samples over cells lying in both balls.
    double intersection_sum(const Ball& a, const Ball& b) const;
};

// For every grid cell, the max of ball_values[i] over the family balls that
// contain the cell center; cells covered by no ball are -infinity. One
// interval-event sweep per row, so the cost is sum over balls of their row
// counts, independent of how much the balls overlap.
std::vector<double> cellwise_family_max(const Grid& grid,
                                        const BallFamily& family,
                                        const std::vector<double>& ball_values);

// max over balls of (avg_B w) * (avg_B w^(1-p'))^(p-1), p > 1.
double ap_constant(const GridFunction& w, double p, const BallFamily& family);

// max over cells of M w / w with M the family maximal operator. Throws a
// coverage error if some cell lies in no family ball.
double a1_constant(const GridFunction& w, const BallFamily& family);

struct A1Scan {
    double value = 1;
    double cap = 1e6;
    bool flagged_non_a1 = false;  // value exceeded the cap
};

// a1_constant plus blow-up detection against a configurable cap.
A1Scan a1_scan(const GridFunction& w, const BallFamily& family,
               double cap = 1e6);

// Fujii-Wilson functional: max over balls B of (1/w(B)) * integral over B of
// M(w 1_B), the inner maximal operator running over the family balls B'
// (numerators clipped to B' cap B, denominators the full discretized |B'|)
// plus B itself, which pins the value at exactly 1 for constant weights.
double ainf_constant(const GridFunction& w, const BallFamily& family);

// ---------------------------------------------------------------------------
// Sharp reverse Holder inequality and the precise open property.

struct ReverseHolderReport {
    double eps = 0;             // exponent actually tested
    double ainf_estimate = 1;   // family A_inf estimate of w
    double ainf_used = 1;       // inflated value defining eps
    double max_ratio = 0;       // max over cubes of avg(w^(1+eps)) / (avg w)^(1+eps)
    Ball argmax{};              // cube attaining the max
    bool pass = false;          // max_ratio <= 2
};

// Checks avg_Q w^(1+eps) <= 2 (avg_Q w)^(1+eps) over a family of cubes
// (sup-metric balls) with eps = 1/(2^(n+1) * ainf_used - 1). The estimated
// A_inf constant is inflated by the given safety factor before use, unless
// eps_override pins the exponent directly (negative controls).
ReverseHolderReport reverse_holder_margin(
    const Weight& w, const Grid& grid, const BallFamily& cubes,
    double inflation = 2.0, std::optional<double> eps_override = std::nullopt);

struct OpenPropertyReport {
    double p = 2;
    double eps = 0;                  // (p-1) / (tau_n * ainf_sigma_used)
    double ainf_sigma_estimate = 1;
    double ainf_sigma_used = 1;      // inflated value defining eps
    double constant_at_p = 1;        // [w]_{A_p} on the family
    double constant_below = 1;       // [w]_{A_{p-eps}} on the same family
    double bound = 2;                // 2^(p-1) * constant_at_p
    bool holds = false;              // constant_below <= bound
};

// Self-improvement of the A_p condition: w in A_{p-eps} with
// [w]_{A_{p-eps}} <= 2^(p-1) [w]_{A_p}, for eps derived from the (inflated)
// A_inf constant of the dual weight sigma = w^(1-p').
OpenPropertyReport open_property(const Weight& w, const Grid& grid,
                                 const BallFamily& family, double p,
                                 double inflation = 2.0);

}  // namespace mlab
