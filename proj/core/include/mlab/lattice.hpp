#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <string>
#include <variant>
#include <vector>

// Discretization substrate: uniform cell-centered lattices over a cube
// [-L, L]^dim, balls (Euclidean or sup metric), midpoint-rule quadrature
// and analytic test-function families sampled onto the lattice.

namespace mlab {

using Point = std::array<double, 3>;

enum class Metric { euclidean, sup };

double distance(const Point& a, const Point& b, int dim, Metric metric);

struct Grid {
    int dim = 1;             // in {1,2,3}
    double half_extent = 1;  // L: grid covers [-L, L]^dim
    int cells_per_axis = 2;  // N

    double spacing() const { return 2.0 * half_extent / cells_per_axis; }
    std::size_t cell_count() const;
    double cell_volume() const;

    // Coordinate of the k-th cell center along one axis: -L + (k + 1/2) h.
    double center_coord(int k) const {
        return -half_extent + (k + 0.5) * spacing();
    }
    // Lexicographic flattening, axis 0 major, last axis contiguous.
    std::size_t flat_index(const std::array<int, 3>& idx) const;
    std::array<int, 3> multi_index(std::size_t flat) const;
    Point center(std::size_t flat) const;

    bool same_layout(const Grid& other) const;
};

Grid make_grid(int dim, double half_extent, int cells_per_axis);

struct Ball {
    Point center{0.0, 0.0, 0.0};
    double radius = 0;
    Metric metric = Metric::euclidean;

    // Membership is strict: a cell belongs to the ball iff its center lies
    // strictly inside.
    bool contains(const Point& x, int dim) const;
};

struct GridFunction {
    Grid grid;
    std::vector<double> values;
};

GridFunction constant_function(const Grid& grid, double value);

// Visits the ball's cell set one contiguous run at a time. The callback
// receives (flat index of first cell in the run, count). Runs are emitted in
// lexicographic order, so any accumulation over them is deterministic.
void for_each_ball_run(const Grid& grid, const Ball& ball,
                       const std::function<void(std::size_t, int)>& visit);

// Index interval [lo, hi) of the ball's cells along the last axis, on the row
// fixed by the leading dim-1 entries of row_idx. Empty intervals have
// lo >= hi.
std::pair<int, int> ball_row_interval(const Grid& grid, const Ball& ball,
                                      const std::array<int, 3>& row_idx);

// Indices k with |center_coord(k) - center| < half_width, as [lo, hi).
std::pair<int, int> axis_index_interval(const Grid& grid, double center,
                                        double half_width);

std::vector<std::size_t> cells_in_ball(const Grid& grid, const Ball& ball);
std::size_t ball_cell_count(const Grid& grid, const Ball& ball);

// Discretized measure h^dim * #cells; throws empty-region if no cell center
// falls inside.
double ball_measure(const Grid& grid, const Ball& ball);

double integrate(const GridFunction& f, const Ball& ball);
double integrate_all(const GridFunction& f);
double average(const GridFunction& f, const Ball& ball);

// ---------------------------------------------------------------------------
// Analytic test functions. Each analytic variant evaluates exactly at any
// point and carries exact first (and where meaningful, second) derivatives.

// Radial plateau: 1 on B(c,eps), 0 outside B(c,2*eps), affine in |x-c|
// in between; |grad| = 1/eps on the transition annulus.
struct Bump {
    double eps = 0.25;
    Point center{0.0, 0.0, 0.0};
};

// f(x) = offset - slope * |x - apex|.
struct Cone {
    double slope = 1.0;
    double offset = 1.0;
    Point apex{0.0, 0.0, 0.0};
};

// f(x) = exp(-|x - center|^2 / (2 width^2)), peak normalized to 1.
struct Gaussian {
    double width = 1.0;
    Point center{0.0, 0.0, 0.0};
};

// Multivariate polynomial: sum of coeff * x^exponent over terms.
struct Polynomial {
    struct Term {
        std::array<int, 3> exponent{0, 0, 0};
        double coeff = 0;
    };
    std::vector<Term> terms;
};

struct SampledSpec {
    GridFunction data;  // nearest-cell evaluation
};

using FunctionSpec = std::variant<Bump, Cone, Gaussian, Polynomial, SampledSpec>;

double eval(const FunctionSpec& spec, const Point& x, int dim);

// f(./lambda); throws for SampledSpec (no analytic rescaling available).
FunctionSpec dilated(const FunctionSpec& spec, double lambda);

GridFunction sample(const FunctionSpec& spec, const Grid& grid);

// ---------------------------------------------------------------------------
// Finite families of balls standing in for "sup over all balls".

struct BallFamily {
    std::vector<Ball> balls;
    // Provenance of lattice-generated families (zeroed for ad-hoc ones).
    int center_stride = 0;
    double ratio = 0;
    double r_min = 0;
    double r_max = 0;
};

// Deterministic family: centers at every stride-th cell center per axis,
// radii on the geometric ladder r_min * ratio^k <= r_max.
BallFamily ball_family(const Grid& grid, double ratio, double r_min,
                       double r_max, int center_stride,
                       Metric metric = Metric::euclidean);

// Convenience defaults (ratio 2^(1/4), r_min 2h, r_max 2L).
BallFamily default_ball_family(const Grid& grid, int center_stride = 2,
                               Metric metric = Metric::euclidean);

BallFamily scaled(const BallFamily& family, double lambda);

// Smallest radius that guarantees every grid cell lies strictly inside some
// family ball at the given center stride.
double covering_radius(const Grid& grid, int center_stride, Metric metric);

// ---------------------------------------------------------------------------
// Serialization: header (dim, N, L), then values in lexicographic order.

void write_csv(const GridFunction& f, const std::string& path);
GridFunction read_csv(const std::string& path);
void write_binary(const GridFunction& f, const std::string& path);
GridFunction read_binary(const std::string& path);

}  // namespace mlab
