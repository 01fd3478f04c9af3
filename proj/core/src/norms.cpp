#include "mlab/norms.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mlab {

namespace {

struct BallSamples {
    std::vector<double> absf;
    std::vector<double> w;
    double total_weight = 0;  // sum of w samples (h^n cancels in every ratio)
};

BallSamples collect(const GridFunction& f, const Ball& ball,
                    const GridFunction& w, const char* who) {
    if (!f.grid.same_layout(w.grid))
        throw std::invalid_argument(std::string(who) +
                                    ": function and weight live on different grids");
    BallSamples out;
    for_each_ball_run(f.grid, ball, [&](std::size_t start, int count) {
        for (int k = 0; k < count; ++k) {
            const std::size_t i = start + k;
            const double wi = w.values[i];
            if (!(wi > 0))
                throw std::invalid_argument(std::string(who) +
                                            ": weight must be strictly positive");
            out.absf.push_back(std::fabs(f.values[i]));
            out.w.push_back(wi);
            out.total_weight += wi;
        }
    });
    if (out.absf.empty())
        throw std::runtime_error(std::string(who) +
                                 ": empty region (no cell center inside ball)");
    return out;
}

}  // namespace

double weighted_lp(const GridFunction& f, double p, const Ball& ball,
                   const GridFunction& w) {
    if (!(p >= 1))
        throw std::invalid_argument("weighted_lp: p must be >= 1");
    const BallSamples s = collect(f, ball, w, "weighted_lp");
    double acc = 0;
    for (std::size_t i = 0; i < s.absf.size(); ++i)
        acc += std::pow(s.absf[i], p) * s.w[i];
    return std::pow(acc / s.total_weight, 1.0 / p);
}

double weighted_lp(const GridFunction& f, double p, const Ball& ball,
                   const Weight& w) {
    return weighted_lp(f, p, ball, discretize(w, f.grid));
}

DistributionFunction distribution(const GridFunction& f, const Ball& ball,
                                  const GridFunction& w) {
    const BallSamples s = collect(f, ball, w, "distribution");

    // Sort samples by (value, position) so ties accumulate in a fixed order.
    std::vector<std::size_t> order(s.absf.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (s.absf[a] != s.absf[b]) return s.absf[a] < s.absf[b];
        return a < b;
    });

    DistributionFunction dist;
    // Walk descending, accumulating the mass strictly above each distinct
    // value; then flip to ascending order.
    double above = 0;
    std::vector<double> thresholds_desc, masses_desc;
    std::size_t k = order.size();
    while (k > 0) {
        const double value = s.absf[order[k - 1]];
        double group = 0;
        while (k > 0 && s.absf[order[k - 1]] == value) {
            group += s.w[order[k - 1]];
            --k;
        }
        thresholds_desc.push_back(value);
        masses_desc.push_back(above / s.total_weight);
        above += group;
    }
    dist.thresholds.assign(thresholds_desc.rbegin(), thresholds_desc.rend());
    dist.masses.assign(masses_desc.rbegin(), masses_desc.rend());
    return dist;
}

DistributionFunction distribution(const GridFunction& f, const Ball& ball,
                                  const Weight& w) {
    return distribution(f, ball, discretize(w, f.grid));
}

double lorentz_weak(const DistributionFunction& dist, double q) {
    if (!(q >= 1))
        throw std::invalid_argument("lorentz_weak: q must be >= 1");
    double best = 0;
    for (std::size_t k = 0; k < dist.thresholds.size(); ++k) {
        const double mass_at_least = k == 0 ? 1.0 : dist.masses[k - 1];
        best = std::max(best,
                        dist.thresholds[k] * std::pow(mass_at_least, 1.0 / q));
    }
    return best;
}

double lorentz_weak(const GridFunction& f, double q, const Ball& ball,
                    const GridFunction& w) {
    return lorentz_weak(distribution(f, ball, w), q);
}

double lorentz_weak(const GridFunction& f, double q, const Ball& ball,
                    const Weight& w) {
    return lorentz_weak(distribution(f, ball, w), q);
}

double lorentz(const DistributionFunction& dist, double integrability,
               double fineness) {
    const double a = integrability, b = fineness;
    if (!(a >= 1) || !(b >= 1))
        throw std::invalid_argument("lorentz: both exponents must be >= 1");
    // (a/b) * sum over segments (v_k, v_{k+1}] of mass(>v_k)^(b/a)
    // * (v_{k+1}^b - v_k^b), with v_0 = 0 prepended.
    double acc = 0;
    double prev_v = 0;
    double prev_mass = 1.0;  // mass(> 0-) of |f|, i.e. everything
    for (std::size_t k = 0; k < dist.thresholds.size(); ++k) {
        const double v = dist.thresholds[k];
        if (v > prev_v && prev_mass > 0)
            acc += std::pow(prev_mass, b / a) *
                   (std::pow(v, b) - std::pow(prev_v, b));
        prev_v = v;
        prev_mass = dist.masses[k];
    }
    return std::pow((a / b) * acc, 1.0 / b);
}

double lorentz(const GridFunction& f, double integrability, double fineness,
               const Ball& ball, const GridFunction& w) {
    return lorentz(distribution(f, ball, w), integrability, fineness);
}

double lorentz(const GridFunction& f, double integrability, double fineness,
               const Ball& ball, const Weight& w) {
    return lorentz(distribution(f, ball, w), integrability, fineness);
}

}  // namespace mlab
