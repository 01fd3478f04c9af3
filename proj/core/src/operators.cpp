#include "mlab/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>

#include "mlab/parallel.hpp"

namespace mlab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_alpha(double alpha, int dim, const char* who) {
    if (!(alpha > 0) || !(alpha < dim))
        throw std::invalid_argument(std::string(who) + ": alpha must lie in (0, dim)");
}

// Radius of the ball with the same volume as one cell.
double equal_volume_radius(const Grid& grid) {
    return grid.spacing() * std::pow(1.0 / unit_ball_volume(grid.dim),
                                     1.0 / grid.dim);
}

// Exact integral of |y|^(alpha-n) over the equal-volume ball of one cell.
double diagonal_rule(const Grid& grid, double alpha) {
    const double rho = equal_volume_radius(grid);
    return sphere_measure(grid.dim) * std::pow(rho, alpha) / alpha;
}

// Offsets of the refine^dim subcell centers within one cell.
std::vector<Point> subcell_offsets(const Grid& grid, int refine) {
    const double hs = grid.spacing() / refine;
    std::vector<Point> out;
    std::array<int, 3> k{0, 0, 0};
    const int reps[3] = {refine, grid.dim > 1 ? refine : 1, grid.dim > 2 ? refine : 1};
    for (k[0] = 0; k[0] < reps[0]; ++k[0])
        for (k[1] = 0; k[1] < reps[1]; ++k[1])
            for (k[2] = 0; k[2] < reps[2]; ++k[2]) {
                Point u{0.0, 0.0, 0.0};
                for (int ax = 0; ax < grid.dim; ++ax)
                    u[ax] = -grid.spacing() / 2 + (k[ax] + 0.5) * hs;
                out.push_back(u);
            }
    return out;
}

}  // namespace

GridFunction maximal(const GridFunction& f, const BallFamily& family) {
    if (family.balls.empty())
        throw std::invalid_argument("maximal: empty ball family");
    GridFunction absf = f;
    for (auto& v : absf.values) v = std::fabs(v);

    const RowPrefix pref(absf);
    std::vector<double> averages(family.balls.size(), 0.0);
    for (std::size_t i = 0; i < family.balls.size(); ++i) {
        const std::size_t count = ball_cell_count(f.grid, family.balls[i]);
        if (count > 0)
            averages[i] = pref.ball_sum(family.balls[i]) / static_cast<double>(count);
    }
    GridFunction out{f.grid, cellwise_family_max(f.grid, family, averages)};
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        if (out.values[i] == kNegInf) {
            const Point c = f.grid.center(i);
            throw std::runtime_error(
                "maximal: cell " + std::to_string(i) + " at (" +
                std::to_string(c[0]) + ", " + std::to_string(c[1]) + ", " +
                std::to_string(c[2]) + ") lies in no family ball");
        }
    }
    return out;
}

GridFunction fractional_maximal(const GridFunction& f, double alpha,
                                const BallFamily& family) {
    check_alpha(alpha, f.grid.dim, "fractional_maximal");
    if (family.balls.empty())
        throw std::invalid_argument("fractional_maximal: empty ball family");
    GridFunction absf = f;
    for (auto& v : absf.values) v = std::fabs(v);

    const RowPrefix pref(absf);
    std::vector<double> values(family.balls.size(), 0.0);
    for (std::size_t i = 0; i < family.balls.size(); ++i) {
        const Ball& b = family.balls[i];
        const std::size_t count = ball_cell_count(f.grid, b);
        if (count > 0)
            values[i] = std::pow(b.radius, alpha) * pref.ball_sum(b) /
                        static_cast<double>(count);
    }
    GridFunction out{f.grid, cellwise_family_max(f.grid, family, values)};
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        if (out.values[i] == kNegInf) {
            const Point c = f.grid.center(i);
            throw std::runtime_error(
                "fractional_maximal: cell " + std::to_string(i) + " at (" +
                std::to_string(c[0]) + ", " + std::to_string(c[1]) + ", " +
                std::to_string(c[2]) + ") lies in no family ball");
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

// Kernel table over all cell-center offsets: K[d] = contribution of a source
// cell at offset d to a target cell center, i.e. h^n |dx|^(alpha-n) far from
// the diagonal, a subdivided sum within distance 2h, and the exact
// equal-volume-ball integral at the diagonal.
std::vector<double> offset_kernel_table(const Grid& grid,
                                        const KernelQuadrature& quad) {
    const int n = grid.cells_per_axis;
    const int span = 2 * n - 1;
    const int dim = grid.dim;
    const double h = grid.spacing();
    const double expo = quad.alpha - dim;
    const double cellvol = grid.cell_volume();
    const auto subs = subcell_offsets(grid, std::max(1, quad.near_diagonal_refine));
    const double subvol = cellvol / static_cast<double>(subs.size());

    std::size_t total = 1;
    for (int ax = 0; ax < dim; ++ax) total *= static_cast<std::size_t>(span);
    std::vector<double> table(total);

    parallel_for(total, [&](std::size_t begin, std::size_t end) {
        for (std::size_t flat = begin; flat < end; ++flat) {
            std::size_t rest = flat;
            std::array<int, 3> d{0, 0, 0};
            for (int ax = dim - 1; ax >= 0; --ax) {
                d[ax] = static_cast<int>(rest % span) - (n - 1);
                rest /= span;
            }
            int dist2 = 0;
            Point dx{0.0, 0.0, 0.0};
            for (int ax = 0; ax < dim; ++ax) {
                dist2 += d[ax] * d[ax];
                dx[ax] = d[ax] * h;
            }
            if (dist2 == 0) {
                table[flat] = diagonal_rule(grid, quad.alpha);
            } else if (dist2 <= 4) {
                double acc = 0;
                for (const Point& u : subs) {
                    double s = 0;
                    for (int ax = 0; ax < dim; ++ax) {
                        const double t = dx[ax] - u[ax];
                        s += t * t;
                    }
                    acc += std::pow(std::sqrt(s), expo);
                }
                table[flat] = subvol * acc;
            } else {
                table[flat] = cellvol * std::pow(std::sqrt(static_cast<double>(dist2)) * h, expo);
            }
        }
    });
    return table;
}

}  // namespace

GridFunction riesz(const GridFunction& f, const KernelQuadrature& quad) {
    const Grid& grid = f.grid;
    check_alpha(quad.alpha, grid.dim, "riesz");
    if (f.values.size() != grid.cell_count())
        throw std::invalid_argument("riesz: value count does not match grid");

    const int n = grid.cells_per_axis;
    const int span = 2 * n - 1;
    const std::vector<double> table = offset_kernel_table(grid, quad);

    GridFunction out{grid, std::vector<double>(grid.cell_count(), 0.0)};
    if (grid.dim == 1) {
        parallel_for(static_cast<std::size_t>(n), [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                const double* krow = table.data() + (i + n - 1);
                double acc = 0;
                for (int j = 0; j < n; ++j) acc += f.values[j] * krow[-j];
                out.values[i] = acc;
            }
        });
        return out;
    }
    if (grid.dim == 2) {
        parallel_for(static_cast<std::size_t>(n) * n, [&](std::size_t begin, std::size_t end) {
            for (std::size_t t = begin; t < end; ++t) {
                const int i0 = static_cast<int>(t) / n;
                const int i1 = static_cast<int>(t) % n;
                double acc = 0;
                for (int j0 = 0; j0 < n; ++j0) {
                    const double* frow = f.values.data() + static_cast<std::size_t>(j0) * n;
                    const double* krow =
                        table.data() +
                        static_cast<std::size_t>(i0 - j0 + n - 1) * span + (i1 + n - 1);
                    double row_acc = 0;
                    for (int j1 = 0; j1 < n; ++j1) row_acc += frow[j1] * krow[-j1];
                    acc += row_acc;
                }
                out.values[t] = acc;
            }
        });
        return out;
    }
    parallel_for(grid.cell_count(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t t = begin; t < end; ++t) {
            const auto ti = grid.multi_index(t);
            double acc = 0;
            for (int j0 = 0; j0 < n; ++j0)
                for (int j1 = 0; j1 < n; ++j1) {
                    const double* frow =
                        f.values.data() + (static_cast<std::size_t>(j0) * n + j1) * n;
                    const double* krow =
                        table.data() +
                        ((static_cast<std::size_t>(ti[0] - j0 + n - 1) * span) +
                         (ti[1] - j1 + n - 1)) * span + (ti[2] + n - 1);
                    double row_acc = 0;
                    for (int j2 = 0; j2 < n; ++j2) row_acc += frow[j2] * krow[-j2];
                    acc += row_acc;
                }
            out.values[t] = acc;
        }
    });
    return out;
}

double riesz_at(const GridFunction& f, const KernelQuadrature& quad,
                const Point& x) {
    const Grid& grid = f.grid;
    check_alpha(quad.alpha, grid.dim, "riesz_at");
    const double h = grid.spacing();
    const double expo = quad.alpha - grid.dim;
    const double cellvol = grid.cell_volume();
    const auto subs = subcell_offsets(grid, std::max(1, quad.near_diagonal_refine));
    const double subvol = cellvol / static_cast<double>(subs.size());

    return parallel_sum(grid.cell_count(), [&](std::size_t begin, std::size_t end) {
        double acc = 0;
        for (std::size_t j = begin; j < end; ++j) {
            const double fj = f.values[j];
            if (fj == 0.0) continue;
            const Point y = grid.center(j);
            const double d = distance(x, y, grid.dim, Metric::euclidean);
            if (d == 0.0) {
                acc += fj * diagonal_rule(grid, quad.alpha);
            } else if (d <= 2 * h) {
                double cell_acc = 0;
                for (const Point& u : subs) {
                    double s = 0;
                    for (int ax = 0; ax < grid.dim; ++ax) {
                        const double t = x[ax] - (y[ax] + u[ax]);
                        s += t * t;
                    }
                    if (s == 0.0)
                        cell_acc += diagonal_rule(grid, quad.alpha) / subvol /
                                    static_cast<double>(subs.size());
                    else
                        cell_acc += std::pow(std::sqrt(s), expo);
                }
                acc += fj * subvol * cell_acc;
            } else {
                acc += fj * cellvol * std::pow(d, expo);
            }
        }
        return acc;
    });
}

// ---------------------------------------------------------------------------

namespace {

Polynomial polynomial_partial(const Polynomial& poly, int ax) {
    Polynomial out;
    for (const auto& term : poly.terms) {
        if (term.exponent[ax] == 0) continue;
        Polynomial::Term d = term;
        d.coeff *= term.exponent[ax];
        d.exponent[ax] -= 1;
        out.terms.push_back(d);
    }
    return out;
}

// Exact partial derivative for the differentiable analytic variants.
double analytic_partial(const FunctionSpec& spec, const Point& x, int dim, int ax) {
    if (const auto* g = std::get_if<Gaussian>(&spec)) {
        const double d = distance(x, g->center, dim, Metric::euclidean);
        const double w2 = g->width * g->width;
        return -(x[ax] - g->center[ax]) / w2 * std::exp(-d * d / (2 * w2));
    }
    if (const auto* p = std::get_if<Polynomial>(&spec))
        return eval(FunctionSpec{polynomial_partial(*p, ax)}, x, dim);
    throw std::invalid_argument("analytic_partial: unsupported spec variant");
}

GridFunction finite_difference(const GridFunction& f, int ax) {
    const Grid& grid = f.grid;
    const int n = grid.cells_per_axis;
    const double h = grid.spacing();
    std::size_t stride = 1;
    for (int a = grid.dim - 1; a > ax; --a) stride *= static_cast<std::size_t>(n);

    GridFunction out{grid, std::vector<double>(grid.cell_count())};
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        const int k = grid.multi_index(i)[ax];
        if (k == 0)
            out.values[i] = (f.values[i + stride] - f.values[i]) / h;
        else if (k == n - 1)
            out.values[i] = (f.values[i] - f.values[i - stride]) / h;
        else
            out.values[i] = (f.values[i + stride] - f.values[i - stride]) / (2 * h);
    }
    return out;
}

}  // namespace

GridFunction gradient_magnitude(const FunctionSpec& spec, const Grid& grid) {
    GridFunction out{grid, std::vector<double>(grid.cell_count(), 0.0)};

    if (const auto* b = std::get_if<Bump>(&spec)) {
        for (std::size_t i = 0; i < out.values.size(); ++i) {
            const double rho = distance(grid.center(i), b->center, grid.dim,
                                        Metric::euclidean);
            out.values[i] = (rho > b->eps && rho < 2 * b->eps) ? 1.0 / b->eps : 0.0;
        }
        return out;
    }
    if (const auto* c = std::get_if<Cone>(&spec)) {
        for (auto& v : out.values) v = std::fabs(c->slope);
        return out;
    }
    if (std::holds_alternative<Gaussian>(spec) ||
        std::holds_alternative<Polynomial>(spec)) {
        for (std::size_t i = 0; i < out.values.size(); ++i) {
            const Point x = grid.center(i);
            double s = 0;
            for (int ax = 0; ax < grid.dim; ++ax) {
                const double d = analytic_partial(spec, x, grid.dim, ax);
                s += d * d;
            }
            out.values[i] = std::sqrt(s);
        }
        return out;
    }
    const auto& data = std::get<SampledSpec>(spec).data;
    if (!data.grid.same_layout(grid))
        throw std::invalid_argument("gradient_magnitude: sampled spec grid mismatch");
    std::vector<GridFunction> partials;
    for (int ax = 0; ax < grid.dim; ++ax)
        partials.push_back(finite_difference(data, ax));
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        double s = 0;
        for (int ax = 0; ax < grid.dim; ++ax) s += partials[ax].values[i] * partials[ax].values[i];
        out.values[i] = std::sqrt(s);
    }
    return out;
}

GridFunction highorder_magnitude(const FunctionSpec& spec, int m,
                                 const Grid& grid) {
    if (m != 1 && m != 2)
        throw std::invalid_argument("highorder_magnitude: m must be 1 or 2");

    if (m == 1) {
        // l1 sum over |a| = 1 of |D^a f|; in 1D this is the gradient norm.
        if (grid.dim == 1) return gradient_magnitude(spec, grid);
        GridFunction out{grid, std::vector<double>(grid.cell_count(), 0.0)};
        if (const auto* b = std::get_if<Bump>(&spec)) {
            for (std::size_t i = 0; i < out.values.size(); ++i) {
                const Point x = grid.center(i);
                const double rho = distance(x, b->center, grid.dim, Metric::euclidean);
                if (rho > b->eps && rho < 2 * b->eps) {
                    double l1 = 0;
                    for (int ax = 0; ax < grid.dim; ++ax)
                        l1 += std::fabs(x[ax] - b->center[ax]);
                    out.values[i] = l1 / (rho * b->eps);
                }
            }
            return out;
        }
        if (const auto* c = std::get_if<Cone>(&spec)) {
            for (std::size_t i = 0; i < out.values.size(); ++i) {
                const Point x = grid.center(i);
                const double rho = distance(x, c->apex, grid.dim, Metric::euclidean);
                if (rho == 0.0) {
                    out.values[i] = std::fabs(c->slope);
                    continue;
                }
                double l1 = 0;
                for (int ax = 0; ax < grid.dim; ++ax)
                    l1 += std::fabs(x[ax] - c->apex[ax]);
                out.values[i] = std::fabs(c->slope) * l1 / rho;
            }
            return out;
        }
        if (std::holds_alternative<Gaussian>(spec) ||
            std::holds_alternative<Polynomial>(spec)) {
            for (std::size_t i = 0; i < out.values.size(); ++i) {
                const Point x = grid.center(i);
                double s = 0;
                for (int ax = 0; ax < grid.dim; ++ax)
                    s += std::fabs(analytic_partial(spec, x, grid.dim, ax));
                out.values[i] = s;
            }
            return out;
        }
        const auto& data = std::get<SampledSpec>(spec).data;
        if (!data.grid.same_layout(grid))
            throw std::invalid_argument("highorder_magnitude: sampled spec grid mismatch");
        for (int ax = 0; ax < grid.dim; ++ax) {
            const GridFunction d = finite_difference(data, ax);
            for (std::size_t i = 0; i < out.values.size(); ++i)
                out.values[i] += std::fabs(d.values[i]);
        }
        return out;
    }

    // m == 2: sum over multi-indices (i <= j), each counted once.
    if (std::holds_alternative<Bump>(spec) || std::holds_alternative<Cone>(spec))
        throw std::invalid_argument(
            "highorder_magnitude: piecewise-affine specs have no pointwise "
            "second derivatives");

    GridFunction out{grid, std::vector<double>(grid.cell_count(), 0.0)};
    if (const auto* g = std::get_if<Gaussian>(&spec)) {
        const double w2 = g->width * g->width;
        for (std::size_t i = 0; i < out.values.size(); ++i) {
            const Point x = grid.center(i);
            const double dist =
                distance(x, g->center, grid.dim, Metric::euclidean);
            const double val = std::exp(-dist * dist / (2 * w2));
            double s = 0;
            for (int a = 0; a < grid.dim; ++a)
                for (int b = a; b < grid.dim; ++b) {
                    const double da = x[a] - g->center[a];
                    const double db = x[b] - g->center[b];
                    const double second =
                        (da * db / (w2 * w2) - (a == b ? 1.0 / w2 : 0.0)) * val;
                    s += std::fabs(second);
                }
            out.values[i] = s;
        }
        return out;
    }
    if (const auto* p = std::get_if<Polynomial>(&spec)) {
        std::vector<Polynomial> partials;
        for (int ax = 0; ax < grid.dim; ++ax)
            partials.push_back(polynomial_partial(*p, ax));
        for (std::size_t i = 0; i < out.values.size(); ++i) {
            const Point x = grid.center(i);
            double s = 0;
            for (int a = 0; a < grid.dim; ++a)
                for (int b = a; b < grid.dim; ++b)
                    s += std::fabs(eval(
                        FunctionSpec{polynomial_partial(partials[a], b)}, x, grid.dim));
            out.values[i] = s;
        }
        return out;
    }
    const auto& data = std::get<SampledSpec>(spec).data;
    if (!data.grid.same_layout(grid))
        throw std::invalid_argument("highorder_magnitude: sampled spec grid mismatch");
    std::vector<GridFunction> firsts;
    for (int ax = 0; ax < grid.dim; ++ax)
        firsts.push_back(finite_difference(data, ax));
    for (int a = 0; a < grid.dim; ++a)
        for (int b = a; b < grid.dim; ++b) {
            const GridFunction second = finite_difference(firsts[a], b);
            for (std::size_t i = 0; i < out.values.size(); ++i)
                out.values[i] += std::fabs(second.values[i]);
        }
    return out;
}

// ---------------------------------------------------------------------------

double kappa_angular(double p, int dim) {
    if (!(p >= 1))
        throw std::invalid_argument("kappa_angular: p must be >= 1");
    if (dim == 1) return 1.0;
    if (dim == 3) return 1.0 / (p + 1.0);
    if (dim != 2)
        throw std::invalid_argument("kappa_angular: dim must be 1, 2 or 3");

    static std::map<double, double> cache;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    const auto hit = cache.find(p);
    if (hit != cache.end()) return hit->second;

    // (2/pi) * integral over (0, pi/2) of cos^p, composite Simpson.
    const int segments = 1 << 12;
    const double a = 0.0, b = std::acos(-1.0) / 2;
    const double step = (b - a) / segments;
    double acc = std::pow(std::cos(a), p) + std::pow(std::cos(b), p);
    for (int k = 1; k < segments; ++k)
        acc += (k % 2 ? 4.0 : 2.0) * std::pow(std::cos(a + k * step), p);
    const double value = (2.0 / std::acos(-1.0)) * acc * step / 3.0;
    cache.emplace(p, value);
    return value;
}

namespace {

struct BallCells {
    std::vector<std::size_t> flat;
    std::vector<std::array<int, 3>> idx;
};

BallCells collect_ball_cells(const Grid& grid, const Ball& ball) {
    BallCells out;
    for_each_ball_run(grid, ball, [&](std::size_t start, int count) {
        for (int k = 0; k < count; ++k) {
            out.flat.push_back(start + k);
            out.idx.push_back(grid.multi_index(start + k));
        }
    });
    return out;
}

// Kernel factors for one cell-offset, averaged over refine^dim x refine^dim
// subcell pairs (f is kept at cell values; only the kernel is refined).
// Kernel values over all subcell-center pairs of two cells at offset d (in
// cells). Near the diagonal only the product |f(x)-f(y)|^p K(x-y) is
// integrable -- the kernel alone is not -- so the pair quadrature must keep
// the kernel factors separate and average the full product.
std::vector<double> near_pair_kernels(const Grid& grid,
                                      const std::array<int, 3>& d,
                                      double kernel_exponent,
                                      const std::vector<Point>& subs) {
    const double h = grid.spacing();
    const std::size_t s_count = subs.size();
    std::vector<double> out(s_count * s_count, 0.0);
    for (std::size_t a = 0; a < s_count; ++a)
        for (std::size_t b = 0; b < s_count; ++b) {
            if (d[0] == 0 && d[1] == 0 && d[2] == 0 && a == b) continue;
            double s = 0;
            for (int ax = 0; ax < grid.dim; ++ax) {
                const double t = d[ax] * h + subs[b][ax] - subs[a][ax];
                s += t * t;
            }
            out[a * s_count + b] = std::pow(std::sqrt(s), kernel_exponent);
        }
    return out;
}

// Shared core of the two Gagliardo energies; outer_weight is empty for the
// unweighted version, one value per grid cell otherwise.
double gagliardo_core(const FunctionSpec& f, double p, double delta,
                      const Ball& ball, const Grid& grid, int refine,
                      const std::vector<double>* outer_weight) {
    if (!(p >= 1))
        throw std::invalid_argument("gagliardo: p must be >= 1");
    if (!(delta > 0) || !(delta < 1))
        throw std::invalid_argument("gagliardo: delta must lie in (0, 1)");
    refine = std::max(1, refine);

    const GridFunction samples = sample(f, grid);
    const GridFunction grad = gradient_magnitude(f, grid);
    const BallCells cells = collect_ball_cells(grid, ball);
    if (cells.flat.empty())
        throw std::runtime_error("gagliardo: empty region (no cell center inside ball)");

    const int dim = grid.dim;
    const double h = grid.spacing();
    const double cellvol = grid.cell_volume();
    const double kernel_exponent = -(dim + delta * p);
    const auto subs = subcell_offsets(grid, refine);
    const std::size_t s_count = subs.size();

    // Subcell values of f for every ball cell, so near pairs can average the
    // full product over subcell pairs. SampledSpec evaluates nearest-cell and
    // degrades gracefully to the plain center product.
    std::vector<double> sub_vals(cells.flat.size() * s_count);
    for (std::size_t a = 0; a < cells.flat.size(); ++a) {
        const Point c = grid.center(cells.flat[a]);
        for (std::size_t s = 0; s < s_count; ++s)
            sub_vals[a * s_count + s] =
                eval(f, {c[0] + subs[s][0], c[1] + subs[s][1],
                         c[2] + subs[s][2]},
                     dim);
    }

    // Precompute kernel factors per offset; offsets with |d| <= 2h get the
    // per-subcell-pair table (slot 0 of the table is the same-cell one, whose
    // coincident subcell pairs are zeroed out and handled below).
    const int reach = 2;
    const int side = 2 * reach + 1;
    std::vector<std::vector<double>> near(
        dim == 1 ? side : dim == 2 ? side * side : side * side * side);
    {
        std::array<int, 3> d{0, 0, 0};
        const int lo = -reach;
        const int r1 = dim > 1 ? reach : 0;
        const int r2 = dim > 2 ? reach : 0;
        for (d[0] = lo; d[0] <= reach; ++d[0])
            for (d[1] = dim > 1 ? lo : 0; d[1] <= r1; ++d[1])
                for (d[2] = dim > 2 ? lo : 0; d[2] <= r2; ++d[2]) {
                    const int dist2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
                    std::size_t slot = static_cast<std::size_t>(d[0] + reach);
                    if (dim > 1) slot = slot * side + (d[1] + reach);
                    if (dim > 2) slot = slot * side + (d[2] + reach);
                    if (dist2 > 4) continue;
                    near[slot] =
                        near_pair_kernels(grid, d, kernel_exponent, subs);
                }
    }
    const auto near_slot = [&](const std::array<int, 3>& d) {
        std::size_t slot = static_cast<std::size_t>(d[0] + reach);
        if (dim > 1) slot = slot * side + (d[1] + reach);
        if (dim > 2) slot = slot * side + (d[2] + reach);
        return slot;
    };
    const std::vector<double>& same_cell =
        near[near_slot(std::array<int, 3>{0, 0, 0})];

    // Identical-subcell closed form: integrate the linearized increment
    // against the kernel over the subcell's equal-volume ball. Distinct
    // subcells of the same cell go through the product table above, so this
    // models only the residual band at scale h / refine.
    const double rho = equal_volume_radius(grid) / refine;
    const double self_shape = kappa_angular(p, dim) * sphere_measure(dim) *
                              std::pow(rho, p * (1.0 - delta)) /
                              (p * (1.0 - delta));

    const std::size_t m = cells.flat.size();
    return parallel_sum(m, [&](std::size_t begin, std::size_t end) {
        double acc = 0;
        for (std::size_t a = begin; a < end; ++a) {
            const std::size_t ia = cells.flat[a];
            const auto& ka = cells.idx[a];
            const double fa = samples.values[ia];
            const double wa = outer_weight ? (*outer_weight)[ia] : 1.0;

            // Same cell: cross-subcell product average plus the linearized
            // closed form for the residual identical-subcell band.
            const double subvol = cellvol / static_cast<double>(s_count);
            const double* va = sub_vals.data() + a * s_count;
            double self_cross = 0.0;
            for (std::size_t s = 0; s < s_count; ++s)
                for (std::size_t t = 0; t < s_count; ++t) {
                    if (s == t) continue;
                    self_cross += std::pow(std::fabs(va[s] - va[t]), p) *
                                  same_cell[s * s_count + t];
                }
            acc += wa * (cellvol * std::pow(grad.values[ia], p) * self_shape +
                         self_cross * subvol * subvol);

            for (std::size_t b = a + 1; b < m; ++b) {
                const std::size_t ib = cells.flat[b];
                const auto& kb = cells.idx[b];
                std::array<int, 3> d{kb[0] - ka[0], kb[1] - ka[1], kb[2] - ka[2]};
                const int dist2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
                const double wb = outer_weight ? (*outer_weight)[ib] : 1.0;
                if (dist2 <= 4) {
                    const std::vector<double>& table = near[near_slot(d)];
                    const double* vb = sub_vals.data() + b * s_count;
                    double pair = 0.0;
                    for (std::size_t s = 0; s < s_count; ++s)
                        for (std::size_t t = 0; t < s_count; ++t)
                            pair += std::pow(std::fabs(va[s] - vb[t]), p) *
                                    table[s * s_count + t];
                    acc += (wa + wb) * pair * subvol * subvol;
                } else {
                    const double diff = std::fabs(fa - samples.values[ib]);
                    if (diff == 0.0) continue;
                    const double kernel = std::pow(
                        std::sqrt(static_cast<double>(dist2)) * h,
                        kernel_exponent);
                    acc += (wa + wb) * std::pow(diff, p) * kernel * cellvol *
                           cellvol;
                }
            }
        }
        return acc;
    });
}

}  // namespace

double gagliardo(const FunctionSpec& f, double p, double delta,
                 const Ball& ball, const Grid& grid, int near_diagonal_refine) {
    return gagliardo_core(f, p, delta, ball, grid, near_diagonal_refine, nullptr);
}

double weighted_gagliardo(const FunctionSpec& f, double p, double delta,
                          const Ball& ball, const Weight& w, const Grid& grid,
                          int near_diagonal_refine) {
    const GridFunction wg = discretize(w, grid);
    double wmass = 0;
    for_each_ball_run(grid, ball, [&](std::size_t start, int count) {
        for (int k = 0; k < count; ++k) wmass += wg.values[start + k];
    });
    wmass *= grid.cell_volume();
    if (!(wmass > 0))
        throw std::runtime_error("weighted_gagliardo: empty region or zero weight mass");
    return gagliardo_core(f, p, delta, ball, grid, near_diagonal_refine,
                          &wg.values) /
           wmass;
}

}  // namespace mlab
