#include "mlab/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mlab {

double distance(const Point& a, const Point& b, int dim, Metric metric) {
    if (metric == Metric::sup) {
        double d = 0;
        for (int ax = 0; ax < dim; ++ax)
            d = std::max(d, std::fabs(a[ax] - b[ax]));
        return d;
    }
    double s = 0;
    for (int ax = 0; ax < dim; ++ax) {
        const double t = a[ax] - b[ax];
        s += t * t;
    }
    return std::sqrt(s);
}

std::size_t Grid::cell_count() const {
    std::size_t n = 1;
    for (int ax = 0; ax < dim; ++ax) n *= static_cast<std::size_t>(cells_per_axis);
    return n;
}

double Grid::cell_volume() const {
    double v = 1;
    for (int ax = 0; ax < dim; ++ax) v *= spacing();
    return v;
}

std::size_t Grid::flat_index(const std::array<int, 3>& idx) const {
    std::size_t flat = 0;
    for (int ax = 0; ax < dim; ++ax)
        flat = flat * cells_per_axis + static_cast<std::size_t>(idx[ax]);
    return flat;
}

std::array<int, 3> Grid::multi_index(std::size_t flat) const {
    std::array<int, 3> idx{0, 0, 0};
    for (int ax = dim - 1; ax >= 0; --ax) {
        idx[ax] = static_cast<int>(flat % cells_per_axis);
        flat /= cells_per_axis;
    }
    return idx;
}

Point Grid::center(std::size_t flat) const {
    const auto idx = multi_index(flat);
    Point p{0.0, 0.0, 0.0};
    for (int ax = 0; ax < dim; ++ax) p[ax] = center_coord(idx[ax]);
    return p;
}

bool Grid::same_layout(const Grid& other) const {
    return dim == other.dim && cells_per_axis == other.cells_per_axis &&
           half_extent == other.half_extent;
}

Grid make_grid(int dim, double half_extent, int cells_per_axis) {
    if (dim < 1 || dim > 3)
        throw std::invalid_argument("make_grid: dim must be 1, 2 or 3");
    if (!(half_extent > 0))
        throw std::invalid_argument("make_grid: half_extent must be positive");
    if (cells_per_axis < 2)
        throw std::invalid_argument("make_grid: cells_per_axis must be >= 2");
    return Grid{dim, half_extent, cells_per_axis};
}

bool Ball::contains(const Point& x, int dim) const {
    return distance(x, center, dim, metric) < radius;
}

GridFunction constant_function(const Grid& grid, double value) {
    return GridFunction{grid, std::vector<double>(grid.cell_count(), value)};
}

namespace {

// Smallest k with center_coord(k) > t, clamped to [0, N]. The arithmetic
// guess is corrected by exact comparisons so that ties (cell center exactly
// on the sphere) are excluded deterministically.
int first_index_above(const Grid& grid, double t) {
    const double h = grid.spacing();
    const int n = grid.cells_per_axis;
    int k = static_cast<int>(std::floor((t + grid.half_extent) / h - 0.5)) + 1;
    k = std::clamp(k, 0, n);
    while (k < n && !(grid.center_coord(k) > t)) ++k;
    while (k > 0 && grid.center_coord(k - 1) > t) --k;
    return k;
}

// Smallest k with center_coord(k) >= t (used as exclusive upper bound for
// the strict condition coord < t), clamped to [0, N].
int first_index_at_or_above(const Grid& grid, double t) {
    const double h = grid.spacing();
    const int n = grid.cells_per_axis;
    int k = static_cast<int>(std::floor((t + grid.half_extent) / h - 0.5));
    k = std::clamp(k, 0, n);
    while (k < n && grid.center_coord(k) < t) ++k;
    while (k > 0 && !(grid.center_coord(k - 1) < t)) --k;
    return k;
}

std::pair<int, int> axis_interval(const Grid& grid, double c, double half) {
    if (!(half > 0)) return {0, 0};
    const int lo = first_index_above(grid, c - half);
    const int hi = first_index_at_or_above(grid, c + half);
    return {lo, std::max(lo, hi)};
}

}  // namespace

std::pair<int, int> axis_index_interval(const Grid& grid, double center,
                                        double half_width) {
    return axis_interval(grid, center, half_width);
}

std::pair<int, int> ball_row_interval(const Grid& grid, const Ball& ball,
                                      const std::array<int, 3>& row_idx) {
    const int last = grid.dim - 1;
    if (ball.metric == Metric::sup) {
        for (int ax = 0; ax < last; ++ax) {
            const double d = std::fabs(grid.center_coord(row_idx[ax]) - ball.center[ax]);
            if (!(d < ball.radius)) return {0, 0};
        }
        return axis_interval(grid, ball.center[last], ball.radius);
    }
    double rem = ball.radius * ball.radius;
    for (int ax = 0; ax < last; ++ax) {
        const double d = grid.center_coord(row_idx[ax]) - ball.center[ax];
        rem -= d * d;
    }
    if (!(rem > 0)) return {0, 0};
    return axis_interval(grid, ball.center[last], std::sqrt(rem));
}

void for_each_ball_run(const Grid& grid, const Ball& ball,
                       const std::function<void(std::size_t, int)>& visit) {
    const int n = grid.cells_per_axis;
    std::array<int, 3> idx{0, 0, 0};
    if (grid.dim == 1) {
        const auto [lo, hi] = ball_row_interval(grid, ball, idx);
        if (hi > lo) visit(static_cast<std::size_t>(lo), hi - lo);
        return;
    }
    // Restrict the leading axes to the ball's bounding box.
    const auto box0 = axis_interval(grid, ball.center[0], ball.radius);
    if (grid.dim == 2) {
        for (int i0 = box0.first; i0 < box0.second; ++i0) {
            idx[0] = i0;
            const auto [lo, hi] = ball_row_interval(grid, ball, idx);
            if (hi > lo)
                visit(static_cast<std::size_t>(i0) * n + lo, hi - lo);
        }
        return;
    }
    const auto box1 = axis_interval(grid, ball.center[1], ball.radius);
    for (int i0 = box0.first; i0 < box0.second; ++i0) {
        idx[0] = i0;
        for (int i1 = box1.first; i1 < box1.second; ++i1) {
            idx[1] = i1;
            const auto [lo, hi] = ball_row_interval(grid, ball, idx);
            if (hi > lo)
                visit((static_cast<std::size_t>(i0) * n + i1) * n + lo, hi - lo);
        }
    }
}

std::vector<std::size_t> cells_in_ball(const Grid& grid, const Ball& ball) {
    std::vector<std::size_t> cells;
    for_each_ball_run(grid, ball, [&](std::size_t start, int count) {
        for (int k = 0; k < count; ++k) cells.push_back(start + k);
    });
    return cells;
}

std::size_t ball_cell_count(const Grid& grid, const Ball& ball) {
    std::size_t total = 0;
    for_each_ball_run(grid, ball,
                      [&](std::size_t, int count) { total += count; });
    return total;
}

double ball_measure(const Grid& grid, const Ball& ball) {
    const std::size_t count = ball_cell_count(grid, ball);
    if (count == 0)
        throw std::runtime_error("ball_measure: empty region (no cell center inside ball)");
    return static_cast<double>(count) * grid.cell_volume();
}

double integrate(const GridFunction& f, const Ball& ball) {
    if (f.values.size() != f.grid.cell_count())
        throw std::invalid_argument("integrate: value count does not match grid");
    double sum = 0;
    std::size_t count = 0;
    for_each_ball_run(f.grid, ball, [&](std::size_t start, int n) {
        for (int k = 0; k < n; ++k) sum += f.values[start + k];
        count += n;
    });
    if (count == 0)
        throw std::runtime_error("integrate: empty region (no cell center inside ball)");
    return sum * f.grid.cell_volume();
}

double integrate_all(const GridFunction& f) {
    double sum = 0;
    for (double v : f.values) sum += v;
    return sum * f.grid.cell_volume();
}

double average(const GridFunction& f, const Ball& ball) {
    double sum = 0;
    std::size_t count = 0;
    for_each_ball_run(f.grid, ball, [&](std::size_t start, int n) {
        for (int k = 0; k < n; ++k) sum += f.values[start + k];
        count += n;
    });
    if (count == 0)
        throw std::runtime_error("average: empty region (no cell center inside ball)");
    return sum / static_cast<double>(count);
}

// ---------------------------------------------------------------------------

namespace {

double radial_bump(double rho, double eps) {
    if (rho <= eps) return 1.0;
    if (rho >= 2 * eps) return 0.0;
    return 2.0 - rho / eps;
}

}  // namespace

double eval(const FunctionSpec& spec, const Point& x, int dim) {
    return std::visit(
        [&](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Bump>) {
                return radial_bump(distance(x, s.center, dim, Metric::euclidean), s.eps);
            } else if constexpr (std::is_same_v<T, Cone>) {
                return s.offset - s.slope * distance(x, s.apex, dim, Metric::euclidean);
            } else if constexpr (std::is_same_v<T, Gaussian>) {
                const double d = distance(x, s.center, dim, Metric::euclidean);
                return std::exp(-d * d / (2.0 * s.width * s.width));
            } else if constexpr (std::is_same_v<T, Polynomial>) {
                double total = 0;
                for (const auto& term : s.terms) {
                    double mono = term.coeff;
                    for (int ax = 0; ax < dim; ++ax)
                        for (int e = 0; e < term.exponent[ax]; ++e) mono *= x[ax];
                    total += mono;
                }
                return total;
            } else {
                const Grid& g = s.data.grid;
                std::array<int, 3> idx{0, 0, 0};
                for (int ax = 0; ax < dim; ++ax) {
                    int k = static_cast<int>(std::floor((x[ax] + g.half_extent) / g.spacing()));
                    idx[ax] = std::clamp(k, 0, g.cells_per_axis - 1);
                }
                return s.data.values[g.flat_index(idx)];
            }
        },
        spec);
}

FunctionSpec dilated(const FunctionSpec& spec, double lambda) {
    if (!(lambda > 0))
        throw std::invalid_argument("dilated: lambda must be positive");
    return std::visit(
        [&](const auto& s) -> FunctionSpec {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Bump>) {
                Bump out = s;
                out.eps *= lambda;
                for (auto& c : out.center) c *= lambda;
                return out;
            } else if constexpr (std::is_same_v<T, Cone>) {
                Cone out = s;
                out.slope /= lambda;
                for (auto& c : out.apex) c *= lambda;
                return out;
            } else if constexpr (std::is_same_v<T, Gaussian>) {
                Gaussian out = s;
                out.width *= lambda;
                for (auto& c : out.center) c *= lambda;
                return out;
            } else if constexpr (std::is_same_v<T, Polynomial>) {
                Polynomial out = s;
                for (auto& term : out.terms) {
                    const int total = term.exponent[0] + term.exponent[1] + term.exponent[2];
                    term.coeff /= std::pow(lambda, total);
                }
                return out;
            } else {
                throw std::invalid_argument("dilated: sampled functions cannot be rescaled analytically");
                return s;  // unreachable
            }
        },
        spec);
}

GridFunction sample(const FunctionSpec& spec, const Grid& grid) {
    if (const auto* s = std::get_if<SampledSpec>(&spec)) {
        if (!s->data.grid.same_layout(grid))
            throw std::invalid_argument("sample: sampled spec lives on an incompatible grid");
        return s->data;
    }
    GridFunction f{grid, std::vector<double>(grid.cell_count())};
    for (std::size_t i = 0; i < f.values.size(); ++i)
        f.values[i] = eval(spec, grid.center(i), grid.dim);
    return f;
}

// ---------------------------------------------------------------------------

BallFamily ball_family(const Grid& grid, double ratio, double r_min,
                       double r_max, int center_stride, Metric metric) {
    if (!(ratio > 1))
        throw std::invalid_argument("ball_family: radius ladder ratio must exceed 1");
    if (!(r_min > 0) || r_min > r_max || r_max > 2 * grid.half_extent)
        throw std::invalid_argument("ball_family: need 0 < r_min <= r_max <= 2L");
    if (center_stride < 1)
        throw std::invalid_argument("ball_family: center stride must be >= 1");

    std::vector<double> radii;
    for (double r = r_min; r <= r_max * (1 + 1e-12); r *= ratio)
        radii.push_back(r);

    std::vector<int> axis_ticks;
    for (int k = 0; k < grid.cells_per_axis; k += center_stride)
        axis_ticks.push_back(k);

    BallFamily family;
    family.center_stride = center_stride;
    family.ratio = ratio;
    family.r_min = r_min;
    family.r_max = r_max;

    std::array<int, 3> idx{0, 0, 0};
    const auto emit = [&](const std::array<int, 3>& id) {
        Point c{0.0, 0.0, 0.0};
        for (int ax = 0; ax < grid.dim; ++ax) c[ax] = grid.center_coord(id[ax]);
        for (double r : radii)
            family.balls.push_back(Ball{c, r, metric});
    };
    if (grid.dim == 1) {
        for (int a : axis_ticks) { idx[0] = a; emit(idx); }
    } else if (grid.dim == 2) {
        for (int a : axis_ticks)
            for (int b : axis_ticks) { idx[0] = a; idx[1] = b; emit(idx); }
    } else {
        for (int a : axis_ticks)
            for (int b : axis_ticks)
                for (int c : axis_ticks) { idx[0] = a; idx[1] = b; idx[2] = c; emit(idx); }
    }
    return family;
}

BallFamily default_ball_family(const Grid& grid, int center_stride, Metric metric) {
    const double h = grid.spacing();
    return ball_family(grid, std::pow(2.0, 0.25), 2 * h, 2 * grid.half_extent,
                       center_stride, metric);
}

BallFamily scaled(const BallFamily& family, double lambda) {
    BallFamily out = family;
    out.r_min *= lambda;
    out.r_max *= lambda;
    for (auto& b : out.balls) {
        b.radius *= lambda;
        for (auto& c : b.center) c *= lambda;
    }
    return out;
}

double covering_radius(const Grid& grid, int center_stride, Metric metric) {
    const int n = grid.cells_per_axis;
    const double h = grid.spacing();
    const int last_tick = ((n - 1) / center_stride) * center_stride;
    const int interior = center_stride / 2;
    const int edge = (n - 1) - last_tick;
    const double axis_worst = std::max(interior, edge) * h;
    const double worst = (metric == Metric::sup)
                             ? axis_worst
                             : axis_worst * std::sqrt(static_cast<double>(grid.dim));
    return worst * (1.0 + 1e-9) + 1e-300;
}

// ---------------------------------------------------------------------------

void write_csv(const GridFunction& f, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_csv: cannot open " + path);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%d,%d,%.17g\n", f.grid.dim,
                  f.grid.cells_per_axis, f.grid.half_extent);
    out << buf;
    for (double v : f.values) {
        std::snprintf(buf, sizeof buf, "%.17g\n", v);
        out << buf;
    }
}

GridFunction read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("read_csv: missing header in " + path);
    int dim = 0, n = 0;
    double extent = 0;
    if (std::sscanf(line.c_str(), "%d,%d,%lf", &dim, &n, &extent) != 3)
        throw std::runtime_error("read_csv: malformed header in " + path);
    GridFunction f{make_grid(dim, extent, n), {}};
    f.values.reserve(f.grid.cell_count());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        f.values.push_back(std::strtod(line.c_str(), nullptr));
    }
    if (f.values.size() != f.grid.cell_count())
        throw std::runtime_error("read_csv: value count does not match header in " + path);
    return f;
}

void write_binary(const GridFunction& f, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_binary: cannot open " + path);
    const char magic[8] = {'M', 'L', 'A', 'B', 'G', 'F', '0', '1'};
    out.write(magic, sizeof magic);
    const std::int32_t dim = f.grid.dim;
    const std::int32_t n = f.grid.cells_per_axis;
    const double extent = f.grid.half_extent;
    out.write(reinterpret_cast<const char*>(&dim), sizeof dim);
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    out.write(reinterpret_cast<const char*>(&extent), sizeof extent);
    out.write(reinterpret_cast<const char*>(f.values.data()),
              static_cast<std::streamsize>(f.values.size() * sizeof(double)));
}

GridFunction read_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_binary: cannot open " + path);
    char magic[8];
    in.read(magic, sizeof magic);
    if (std::memcmp(magic, "MLABGF01", 8) != 0)
        throw std::runtime_error("read_binary: bad magic in " + path);
    std::int32_t dim = 0, n = 0;
    double extent = 0;
    in.read(reinterpret_cast<char*>(&dim), sizeof dim);
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    in.read(reinterpret_cast<char*>(&extent), sizeof extent);
    GridFunction f{make_grid(dim, extent, n),
                   std::vector<double>(static_cast<std::size_t>(0))};
    f.values.resize(f.grid.cell_count());
    in.read(reinterpret_cast<char*>(f.values.data()),
            static_cast<std::streamsize>(f.values.size() * sizeof(double)));
    if (!in)
        throw std::runtime_error("read_binary: truncated file " + path);
    return f;
}

}  // namespace mlab
