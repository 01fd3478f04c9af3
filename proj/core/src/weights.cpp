#include "mlab/weights.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>

namespace mlab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_positive(const GridFunction& w, const char* who) {
    for (std::size_t i = 0; i < w.values.size(); ++i) {
        const double v = w.values[i];
        if (!(v > 0) || !std::isfinite(v))
            throw std::invalid_argument(std::string(who) +
                                        ": weight must be strictly positive and finite "
                                        "(offending cell " + std::to_string(i) + ")");
    }
}

// Calls fn(row_idx, row_id) for every lattice row meeting the ball's
// bounding box; row_id indexes rows in lexicographic order.
template <typename Fn>
void for_each_candidate_row(const Grid& grid, const Ball& ball, Fn&& fn) {
    const int n = grid.cells_per_axis;
    std::array<int, 3> idx{0, 0, 0};
    if (grid.dim == 1) {
        fn(idx, std::size_t{0});
        return;
    }
    const auto box0 = axis_index_interval(grid, ball.center[0], ball.radius);
    if (grid.dim == 2) {
        for (int i0 = box0.first; i0 < box0.second; ++i0) {
            idx[0] = i0;
            fn(idx, static_cast<std::size_t>(i0));
        }
        return;
    }
    const auto box1 = axis_index_interval(grid, ball.center[1], ball.radius);
    for (int i0 = box0.first; i0 < box0.second; ++i0) {
        idx[0] = i0;
        for (int i1 = box1.first; i1 < box1.second; ++i1) {
            idx[1] = i1;
            fn(idx, static_cast<std::size_t>(i0) * n + i1);
        }
    }
}

struct BallSums {
    double sum_a = 0;
    double sum_b = 0;
    std::size_t count = 0;
};

// One pass over the ball's rows accumulating prefix-sum differences for one
// or two sample arrays plus the cell count.
BallSums fused_ball_sums(const Grid& grid, const Ball& ball,
                         const std::vector<double>& pref_a,
                         const std::vector<double>* pref_b) {
    const int n = grid.cells_per_axis;
    BallSums out;
    for_each_candidate_row(grid, ball, [&](const std::array<int, 3>& idx, std::size_t row) {
        const auto [lo, hi] = ball_row_interval(grid, ball, idx);
        if (hi <= lo) return;
        const std::size_t base = row * (n + 1);
        out.sum_a += pref_a[base + hi] - pref_a[base + lo];
        if (pref_b) out.sum_b += (*pref_b)[base + hi] - (*pref_b)[base + lo];
        out.count += static_cast<std::size_t>(hi - lo);
    });
    return out;
}

// Quick reject for ball pairs that cannot intersect.
bool may_intersect(const Ball& a, const Ball& b, int dim) {
    return distance(a.center, b.center, dim,
                    a.metric == Metric::sup ? Metric::sup : Metric::euclidean) <
           a.radius + b.radius;
}

}  // namespace

Weight power_weight(int dim, double delta) {
    if (dim < 1 || dim > 3)
        throw std::invalid_argument("power_weight: dim must be 1, 2 or 3");
    if (!(delta > 0))
        throw std::invalid_argument("power_weight: delta must be positive");
    return Weight{dim, AnalyticPower{delta}};
}

Weight sampled_weight(GridFunction data) {
    require_positive(data, "sampled_weight");
    const int dim = data.grid.dim;
    return Weight{dim, GridSampled{std::move(data)}};
}

double sphere_measure(int dim) {
    switch (dim) {
        case 1: return 2.0;
        case 2: return 2.0 * std::acos(-1.0);
        case 3: return 4.0 * std::acos(-1.0);
        default: throw std::invalid_argument("sphere_measure: dim must be 1, 2 or 3");
    }
}

double unit_ball_volume(int dim) {
    return sphere_measure(dim) / dim;
}

double eval(const Weight& w, const Point& x) {
    if (const auto* p = std::get_if<AnalyticPower>(&w.form)) {
        const Point origin{0.0, 0.0, 0.0};
        const double r = distance(x, origin, w.dim, Metric::euclidean);
        return std::pow(r, p->delta - w.dim);
    }
    const auto& s = std::get<GridSampled>(w.form);
    const Grid& g = s.data.grid;
    std::array<int, 3> idx{0, 0, 0};
    for (int ax = 0; ax < w.dim; ++ax) {
        int k = static_cast<int>(std::floor((x[ax] + g.half_extent) / g.spacing()));
        idx[ax] = std::clamp(k, 0, g.cells_per_axis - 1);
    }
    return s.data.values[g.flat_index(idx)];
}

GridFunction discretize(const Weight& w, const Grid& grid) {
    if (const auto* s = std::get_if<GridSampled>(&w.form)) {
        if (s->data.grid.same_layout(grid)) return s->data;
    }
    GridFunction out{grid, std::vector<double>(grid.cell_count())};
    for (std::size_t i = 0; i < out.values.size(); ++i)
        out.values[i] = eval(w, grid.center(i));
    require_positive(out, "discretize");
    return out;
}

namespace {

bool analytic_exact_mass_applies(const Weight& w, const Ball& ball) {
    if (!std::holds_alternative<AnalyticPower>(w.form)) return false;
    for (int ax = 0; ax < w.dim; ++ax)
        if (ball.center[ax] != 0.0) return false;
    return ball.metric == Metric::euclidean || w.dim == 1;
}

}  // namespace

double weight_mass(const Weight& w, const Ball& ball) {
    if (analytic_exact_mass_applies(w, ball)) {
        const double delta = std::get<AnalyticPower>(w.form).delta;
        return sphere_measure(w.dim) * std::pow(ball.radius, delta) / delta;
    }
    if (const auto* s = std::get_if<GridSampled>(&w.form))
        return integrate(s->data, ball);
    throw std::invalid_argument(
        "weight_mass: analytic weight over an off-center ball needs a grid; "
        "use the grid overload");
}

double weight_mass(const Weight& w, const Ball& ball, const Grid& grid) {
    if (analytic_exact_mass_applies(w, ball)) return weight_mass(w, ball);
    if (const auto* s = std::get_if<GridSampled>(&w.form))
        if (s->data.grid.same_layout(grid)) return integrate(s->data, ball);
    return integrate(discretize(w, grid), ball);
}

double conjugate_exponent(double p) {
    if (!(p > 1))
        throw std::invalid_argument("conjugate_exponent: p must exceed 1");
    return p / (p - 1);
}

Weight dual_weight(const Weight& w, double r) {
    if (!(r > 1))
        throw std::invalid_argument("dual_weight: r must exceed 1");
    const double e = 1.0 - conjugate_exponent(r);  // 1 - r' < 0
    if (const auto* p = std::get_if<AnalyticPower>(&w.form)) {
        const double delta_sigma = w.dim + (p->delta - w.dim) * e;
        if (!(delta_sigma > 0))
            throw std::invalid_argument(
                "dual_weight: w^(1-r') is not locally integrable at this r "
                "(power exponent " + std::to_string(delta_sigma - w.dim) + ")");
        return Weight{w.dim, AnalyticPower{delta_sigma}};
    }
    const auto& s = std::get<GridSampled>(w.form);
    GridFunction out = s.data;
    for (auto& v : out.values) v = std::pow(v, e);
    return Weight{w.dim, GridSampled{std::move(out)}};
}

// ---------------------------------------------------------------------------

EllResult ell_w(const Weight& w) {
    if (const auto* p = std::get_if<AnalyticPower>(&w.form))
        return EllResult{std::max(p->delta / w.dim, 1.0), true, {}};
    throw std::invalid_argument(
        "ell_w: sampled weights need a ball family; use the probing overload");
}

EllResult ell_w(const Weight& w, const BallFamily& family, double cap,
                double r_hi, int bisection_steps) {
    if (std::holds_alternative<AnalyticPower>(w.form)) return ell_w(w);
    if (!(r_hi > 1))
        throw std::invalid_argument("ell_w: r_hi must exceed 1");
    const auto& data = std::get<GridSampled>(w.form).data;
    require_positive(data, "ell_w");

    const Grid& coarse = data.grid;
    const Grid fine = make_grid(coarse.dim, coarse.half_extent, 2 * coarse.cells_per_axis);
    const GridFunction refined = discretize(w, fine);

    EllResult out;
    out.exact = false;
    const auto probe = [&](double r) {
        EllProbe pr;
        pr.r = r;
        pr.constant = ap_constant(data, r, family);
        pr.refined_constant = ap_constant(refined, r, family);
        pr.admissible = pr.constant <= cap && pr.refined_constant <= cap;
        out.trace.push_back(pr);
        return pr.admissible;
    };

    if (!probe(r_hi)) {
        out.value = r_hi;  // lower bound only: every probed r was inadmissible
        return out;
    }
    double lo = 1.0, hi = r_hi;
    for (int step = 0; step < bisection_steps; ++step) {
        const double mid = 0.5 * (lo + hi);
        if (probe(mid))
            hi = mid;
        else
            lo = mid;
    }
    out.value = hi;
    return out;
}

double sobolev_exponent_pstar_w(int n, double p, double ell) {
    if (n < 1 || n > 3)
        throw std::invalid_argument("sobolev_exponent_pstar_w: n must be 1, 2 or 3");
    if (!(ell >= 1))
        throw std::invalid_argument("sobolev_exponent_pstar_w: ell must be >= 1");
    if (!(p >= 1) || !(p < n * ell))
        throw std::invalid_argument("sobolev_exponent_pstar_w: need 1 <= p < n*ell");
    return 1.0 / (1.0 / p - 1.0 / (n * ell));
}

ExponentContext make_exponent_context(int n, double alpha, double p, double r,
                                      double ainf_sigma) {
    if (n < 1 || n > 3)
        throw std::invalid_argument("make_exponent_context: n must be 1, 2 or 3");
    if (!(alpha > 0) || !(alpha < n))
        throw std::invalid_argument("make_exponent_context: need 0 < alpha < n");
    if (!(r >= 1) || !(r <= p))
        throw std::invalid_argument("make_exponent_context: need 1 <= r <= p");
    if (!(p < static_cast<double>(n) / alpha))
        throw std::invalid_argument("make_exponent_context: need p < n/alpha");
    if (!(ainf_sigma >= 1))
        throw std::invalid_argument("make_exponent_context: ainf_sigma must be >= 1");
    return ExponentContext{n, alpha, p, r, std::ldexp(1.0, n + 1), ainf_sigma};
}

double exponent_qr_plain(const ExponentContext& ctx) {
    const double inv = 1.0 / ctx.p - (ctx.alpha / ctx.n) / ctx.r;
    if (!(inv > 0))
        throw std::invalid_argument("exponent_qr_plain: relation gives a nonpositive 1/q");
    return 1.0 / inv;
}

double exponent_qr_improved(const ExponentContext& ctx) {
    if (!(ctx.r > 1))
        throw std::invalid_argument(
            "exponent_qr_improved: r must exceed 1 (at r = 1 use the plain exponent)");
    if (!(ctx.ainf_sigma >= 1))
        throw std::invalid_argument("exponent_qr_improved: ainf_sigma must be >= 1");
    const double ta = ctx.tau * ctx.ainf_sigma;
    const double fraction = ta / (1.0 + ctx.r * (ta - 1.0));
    const double inv = 1.0 / ctx.p - (ctx.alpha / ctx.n) * fraction;
    if (!(inv > 0))
        throw std::invalid_argument("exponent_qr_improved: relation gives a nonpositive 1/q");
    return 1.0 / inv;
}

// ---------------------------------------------------------------------------

RowPrefix::RowPrefix(const GridFunction& f) : grid(f.grid) {
    const int n = grid.cells_per_axis;
    const std::size_t rows = grid.cell_count() / n;
    pref.assign(rows * (n + 1), 0.0);
    for (std::size_t row = 0; row < rows; ++row) {
        const std::size_t cell_base = row * n;
        const std::size_t pref_base = row * (n + 1);
        double running = 0;
        pref[pref_base] = 0;
        for (int k = 0; k < n; ++k) {
            running += f.values[cell_base + k];
            pref[pref_base + k + 1] = running;
        }
    }
}

double RowPrefix::ball_sum(const Ball& ball) const {
    return fused_ball_sums(grid, ball, pref, nullptr).sum_a;
}

double RowPrefix::intersection_sum(const Ball& a, const Ball& b) const {
    const int n = grid.cells_per_axis;
    double total = 0;
    for_each_candidate_row(grid, a, [&](const std::array<int, 3>& idx, std::size_t row) {
        const auto [alo, ahi] = ball_row_interval(grid, a, idx);
        if (ahi <= alo) return;
        const auto [blo, bhi] = ball_row_interval(grid, b, idx);
        const int lo = std::max(alo, blo);
        const int hi = std::min(ahi, bhi);
        if (hi <= lo) return;
        const std::size_t base = row * (n + 1);
        total += pref[base + hi] - pref[base + lo];
    });
    return total;
}

namespace {

// Chord half-width of the ball on the lattice row named by idx (0 when the
// row misses the ball).  Matches ball_row_interval bit for bit so callers can
// share one chord across balls that differ only in the last center coordinate.
double row_chord_half(const Grid& grid, const Ball& b, const std::array<int, 3>& idx) {
    const int last = grid.dim - 1;
    if (b.metric == Metric::sup) {
        for (int ax = 0; ax < last; ++ax) {
            const double d = std::fabs(grid.center_coord(idx[ax]) - b.center[ax]);
            if (!(d < b.radius)) return 0.0;
        }
        return b.radius;
    }
    double rem = b.radius * b.radius;
    for (int ax = 0; ax < last; ++ax) {
        const double d = grid.center_coord(idx[ax]) - b.center[ax];
        rem -= d * d;
    }
    return rem > 0 ? std::sqrt(rem) : 0.0;
}

}  // namespace

std::vector<double> cellwise_family_max(const Grid& grid,
                                        const BallFamily& family,
                                        const std::vector<double>& ball_values) {
    if (ball_values.size() != family.balls.size())
        throw std::invalid_argument("cellwise_family_max: one value per ball required");
    const int n = grid.cells_per_axis;
    const int last = grid.dim - 1;

    // Balls sharing a metric, radius and leading center coordinates cut every
    // row in equal-width intervals whose endpoints grow with the last center
    // coordinate, so the per-cell maximum inside such a group is a sliding-
    // window maximum.  Grouping keeps the working set at one index per ball
    // instead of one interval per (ball, row) pair, which for a dense family
    // on a fine grid is the difference between megabytes and gigabytes.
    std::vector<std::size_t> order(family.balls.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const auto& balls = family.balls;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        const Ball& a = balls[x];
        const Ball& b = balls[y];
        if (a.metric != b.metric) return a.metric < b.metric;
        if (a.radius != b.radius) return a.radius < b.radius;
        for (int ax = 0; ax < last; ++ax)
            if (a.center[ax] != b.center[ax]) return a.center[ax] < b.center[ax];
        return a.center[last] < b.center[last];
    });
    const auto same_group = [&](std::size_t x, std::size_t y) {
        const Ball& a = balls[x];
        const Ball& b = balls[y];
        if (a.metric != b.metric || a.radius != b.radius) return false;
        for (int ax = 0; ax < last; ++ax)
            if (a.center[ax] != b.center[ax]) return false;
        return true;
    };

    std::vector<double> out(grid.cell_count(), kNegInf);
    std::vector<int> mlo, mhi;
    std::vector<double> mval;
    std::deque<std::size_t> window;  // member indices, values decreasing
    for (std::size_t g0 = 0; g0 < order.size();) {
        std::size_t g1 = g0 + 1;
        while (g1 < order.size() && same_group(order[g0], order[g1])) ++g1;
        const Ball& lead = balls[order[g0]];
        for_each_candidate_row(grid, lead, [&](const std::array<int, 3>& idx,
                                               std::size_t row) {
            const double half = row_chord_half(grid, lead, idx);
            if (!(half > 0)) return;
            mlo.clear();
            mhi.clear();
            mval.clear();
            for (std::size_t g = g0; g < g1; ++g) {
                const auto [lo, hi] =
                    axis_index_interval(grid, balls[order[g]].center[last], half);
                if (hi > lo) {
                    mlo.push_back(lo);
                    mhi.push_back(hi);
                    mval.push_back(ball_values[order[g]]);
                }
            }
            if (mlo.empty()) return;
            // Sorted centers give nondecreasing lo and hi, so the members
            // covering a cell form a window that only moves right.
            window.clear();
            std::size_t next = 0;
            const std::size_t base = row * n;
            for (int k = mlo.front(); k < n; ++k) {
                while (next < mlo.size() && mlo[next] <= k) {
                    while (!window.empty() && mval[window.back()] <= mval[next])
                        window.pop_back();
                    window.push_back(next);
                    ++next;
                }
                while (!window.empty() && mhi[window.front()] <= k) window.pop_front();
                if (window.empty()) {
                    if (next >= mlo.size()) break;
                    k = mlo[next] - 1;  // jump to the next covered stretch
                    continue;
                }
                double& slot = out[base + k];
                if (mval[window.front()] > slot) slot = mval[window.front()];
            }
        });
        g0 = g1;
    }
    return out;
}

double ap_constant(const GridFunction& w, double p, const BallFamily& family) {
    if (!(p > 1))
        throw std::invalid_argument("ap_constant: p must exceed 1 (use a1_constant at p = 1)");
    if (family.balls.empty())
        throw std::invalid_argument("ap_constant: empty ball family");
    require_positive(w, "ap_constant");

    GridFunction dual = w;
    const double e = 1.0 - conjugate_exponent(p);
    for (auto& v : dual.values) v = std::pow(v, e);

    const RowPrefix pw(w);
    const RowPrefix pd(dual);

    double best = kNegInf;
    for (const Ball& b : family.balls) {
        const BallSums s = fused_ball_sums(w.grid, b, pw.pref, &pd.pref);
        if (s.count == 0) continue;
        const double avg_w = s.sum_a / static_cast<double>(s.count);
        const double avg_d = s.sum_b / static_cast<double>(s.count);
        best = std::max(best, avg_w * std::pow(avg_d, p - 1.0));
    }
    if (best == kNegInf)
        throw std::invalid_argument("ap_constant: every family ball has an empty cell set");
    return best;
}

namespace {

std::vector<double> family_averages(const GridFunction& w, const BallFamily& family) {
    const RowPrefix pw(w);
    std::vector<double> avg(family.balls.size(), 0.0);
    for (std::size_t i = 0; i < family.balls.size(); ++i) {
        const BallSums s = fused_ball_sums(w.grid, family.balls[i], pw.pref, nullptr);
        if (s.count > 0) avg[i] = s.sum_a / static_cast<double>(s.count);
    }
    return avg;
}

}  // namespace

double a1_constant(const GridFunction& w, const BallFamily& family) {
    if (family.balls.empty())
        throw std::invalid_argument("a1_constant: empty ball family");
    require_positive(w, "a1_constant");
    const std::vector<double> mw =
        cellwise_family_max(w.grid, family, family_averages(w, family));
    double best = kNegInf;
    for (std::size_t i = 0; i < mw.size(); ++i) {
        if (mw[i] == kNegInf) {
            const Point c = w.grid.center(i);
            throw std::runtime_error(
                "a1_constant: cell " + std::to_string(i) + " at (" +
                std::to_string(c[0]) + ", " + std::to_string(c[1]) + ", " +
                std::to_string(c[2]) +
                ") lies in no family ball; enlarge r_min to at least the "
                "covering radius");
        }
        best = std::max(best, mw[i] / w.values[i]);
    }
    return best;
}

A1Scan a1_scan(const GridFunction& w, const BallFamily& family, double cap) {
    A1Scan scan;
    scan.cap = cap;
    scan.value = a1_constant(w, family);
    scan.flagged_non_a1 = scan.value > cap;
    return scan;
}

double ainf_constant(const GridFunction& w, const BallFamily& family) {
    if (family.balls.empty())
        throw std::invalid_argument("ainf_constant: empty ball family");
    require_positive(w, "ainf_constant");
    const Grid& grid = w.grid;
    const int n = grid.cells_per_axis;
    const RowPrefix pw(w);

    std::vector<std::size_t> counts(family.balls.size());
    for (std::size_t j = 0; j < family.balls.size(); ++j)
        counts[j] = ball_cell_count(grid, family.balls[j]);

    struct Event {
        int lo, hi;
        double val;
    };

    double best = kNegInf;
    for (std::size_t i = 0; i < family.balls.size(); ++i) {
        const Ball& outer = family.balls[i];
        if (counts[i] == 0) continue;
        const double outer_sum = pw.ball_sum(outer);
        const double outer_avg = outer_sum / static_cast<double>(counts[i]);

        // Row-local event lists over the outer ball's bounding box.
        std::vector<std::size_t> row_ids;
        std::vector<std::array<int, 3>> row_idx;
        for_each_candidate_row(grid, outer,
                               [&](const std::array<int, 3>& idx, std::size_t row) {
                                   row_ids.push_back(row);
                                   row_idx.push_back(idx);
                               });
        std::vector<std::vector<Event>> events(row_ids.size());
        std::vector<std::pair<int, int>> outer_iv(row_ids.size());
        for (std::size_t rl = 0; rl < row_ids.size(); ++rl)
            outer_iv[rl] = ball_row_interval(grid, outer, row_idx[rl]);

        for (std::size_t j = 0; j < family.balls.size(); ++j) {
            if (j == i || counts[j] == 0) continue;
            const Ball& inner = family.balls[j];
            if (!may_intersect(outer, inner, grid.dim)) continue;

            // One pass: the clipped mass of w over inner-cap-outer and the
            // clipped row intervals where this candidate competes.
            double inter_sum = 0;
            std::vector<std::pair<std::size_t, std::pair<int, int>>> spans;
            for (std::size_t rl = 0; rl < row_ids.size(); ++rl) {
                const auto [alo, ahi] = outer_iv[rl];
                if (ahi <= alo) continue;
                const auto [blo, bhi] = ball_row_interval(grid, inner, row_idx[rl]);
                const int lo = std::max(alo, blo);
                const int hi = std::min(ahi, bhi);
                if (hi <= lo) continue;
                const std::size_t base = row_ids[rl] * (n + 1);
                inter_sum += pw.pref[base + hi] - pw.pref[base + lo];
                spans.emplace_back(rl, std::make_pair(lo, hi));
            }
            if (!(inter_sum > 0)) continue;
            const double val = inter_sum / static_cast<double>(counts[j]);
            if (val <= outer_avg) continue;  // the outer ball's own average dominates
            for (const auto& [rl, iv] : spans)
                events[rl].push_back(Event{iv.first, iv.second, val});
        }

        // Sweep each row of the outer ball, with its own average as floor.
        double numerator = 0;
        using HeapItem = std::pair<double, int>;
        for (std::size_t rl = 0; rl < row_ids.size(); ++rl) {
            const auto [lo, hi] = outer_iv[rl];
            if (hi <= lo) continue;
            auto& ev = events[rl];
            std::sort(ev.begin(), ev.end(),
                      [](const Event& a, const Event& b) { return a.lo < b.lo; });
            std::priority_queue<HeapItem> heap;
            std::size_t next = 0;
            for (int k = lo; k < hi; ++k) {
                while (next < ev.size() && ev[next].lo <= k) {
                    heap.emplace(ev[next].val, ev[next].hi);
                    ++next;
                }
                while (!heap.empty() && heap.top().second <= k) heap.pop();
                numerator += heap.empty() ? outer_avg
                                          : std::max(outer_avg, heap.top().first);
            }
        }
        best = std::max(best, numerator / outer_sum);
    }
    if (best == kNegInf)
        throw std::invalid_argument("ainf_constant: every family ball has an empty cell set");
    return best;
}

// ---------------------------------------------------------------------------

ReverseHolderReport reverse_holder_margin(const Weight& w, const Grid& grid,
                                          const BallFamily& cubes,
                                          double inflation,
                                          std::optional<double> eps_override) {
    if (cubes.balls.empty())
        throw std::invalid_argument("reverse_holder_margin: empty cube family");
    for (const Ball& b : cubes.balls)
        if (b.metric != Metric::sup)
            throw std::invalid_argument(
                "reverse_holder_margin: the family must consist of cubes "
                "(sup-metric balls)");
    if (!(inflation >= 1))
        throw std::invalid_argument("reverse_holder_margin: inflation must be >= 1");

    const GridFunction wg = discretize(w, grid);

    ReverseHolderReport report;
    report.ainf_estimate = ainf_constant(wg, cubes);
    report.ainf_used = report.ainf_estimate * inflation;
    report.eps = eps_override
                     ? *eps_override
                     : 1.0 / (std::ldexp(1.0, grid.dim + 1) * report.ainf_used - 1.0);

    GridFunction powed = wg;
    for (auto& v : powed.values) v = std::pow(v, 1.0 + report.eps);

    const RowPrefix pw(wg);
    const RowPrefix pp(powed);
    report.max_ratio = kNegInf;
    for (const Ball& cube : cubes.balls) {
        const BallSums sw = fused_ball_sums(grid, cube, pw.pref, &pp.pref);
        if (sw.count == 0) continue;
        const double avg_w = sw.sum_a / static_cast<double>(sw.count);
        const double avg_p = sw.sum_b / static_cast<double>(sw.count);
        const double ratio = avg_p / std::pow(avg_w, 1.0 + report.eps);
        if (ratio > report.max_ratio) {
            report.max_ratio = ratio;
            report.argmax = cube;
        }
    }
    if (report.max_ratio == kNegInf)
        throw std::invalid_argument(
            "reverse_holder_margin: every cube has an empty cell set");
    report.pass = report.max_ratio <= 2.0;
    return report;
}

OpenPropertyReport open_property(const Weight& w, const Grid& grid,
                                 const BallFamily& family, double p,
                                 double inflation) {
    if (!(p > 1))
        throw std::invalid_argument("open_property: p must exceed 1");
    if (!(inflation >= 1))
        throw std::invalid_argument("open_property: inflation must be >= 1");

    const GridFunction wg = discretize(w, grid);
    const GridFunction sg = discretize(dual_weight(w, p), grid);

    OpenPropertyReport report;
    report.p = p;
    report.ainf_sigma_estimate = ainf_constant(sg, family);
    report.ainf_sigma_used = report.ainf_sigma_estimate * inflation;
    const double tau = std::ldexp(1.0, grid.dim + 1);
    report.eps = (p - 1.0) / (tau * report.ainf_sigma_used);
    report.constant_at_p = ap_constant(wg, p, family);
    report.constant_below = ap_constant(wg, p - report.eps, family);
    report.bound = std::pow(2.0, p - 1.0) * report.constant_at_p;
    report.holds = report.constant_below <= report.bound;
    return report;
}

}  // namespace mlab
