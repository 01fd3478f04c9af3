#pragma once

#include "mlab/lattice.hpp"
#include "mlab/weights.hpp"

// Normalized weighted L^p averages over balls and the Lorentz norms taken
// with respect to the probability measure w(x)dx / w(B). The Lorentz layer
// integrals are evaluated exactly on the discrete step distribution, so the
// L^{a,a} = L^a identity holds to rounding error.

namespace mlab {

// Step distribution of |f| on a ball under w dx / w(B).
struct DistributionFunction {
    std::vector<double> thresholds;  // distinct |f| values, ascending
    std::vector<double> masses;      // masses[k] = normalized w(|f| > thresholds[k])
};

// ((1/w(B)) * sum over ball of |f|^p w h^n)^(1/p); monotone nondecreasing
// in p because the measure is normalized.
double weighted_lp(const GridFunction& f, double p, const Ball& ball,
                   const GridFunction& w);
double weighted_lp(const GridFunction& f, double p, const Ball& ball,
                   const Weight& w);

DistributionFunction distribution(const GridFunction& f, const Ball& ball,
                                  const GridFunction& w);
DistributionFunction distribution(const GridFunction& f, const Ball& ball,
                                  const Weight& w);

// sup over t > 0 of t * mass(|f| > t)^(1/q); on a step distribution the sup
// is attained at one of the sampled values v, as v * mass(|f| >= v)^(1/q).
double lorentz_weak(const DistributionFunction& dist, double q);
double lorentz_weak(const GridFunction& f, double q, const Ball& ball,
                    const GridFunction& w);
double lorentz_weak(const GridFunction& f, double q, const Ball& ball,
                    const Weight& w);

// L^{integrability, fineness}: (a * integral of t^(b-1) mass(>t)^(b/a) dt)^(1/b)
// with a = integrability, b = fineness, evaluated exactly segment by segment.
// The first index is the integrability exponent throughout.
double lorentz(const DistributionFunction& dist, double integrability,
               double fineness);
double lorentz(const GridFunction& f, double integrability, double fineness,
               const Ball& ball, const GridFunction& w);
double lorentz(const GridFunction& f, double integrability, double fineness,
               const Ball& ball, const Weight& w);

}  // namespace mlab
