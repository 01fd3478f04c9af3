#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace mlab {

/// Result of a least-squares power-law fit y ~ C * x^slope.
struct FitResult {
    double slope = 0.0;
    /// log C, the intercept of the line fitted through (log x, log y).
    double intercept = 0.0;
    /// Largest relative deviation |y_i - fit(x_i)| / fit(x_i) over the samples.
    double residual = 0.0;
};

/// Least-squares line through (log x, log y). Requires at least four samples,
/// all with strictly positive x and y; throws std::invalid_argument otherwise.
FitResult fit_loglog(const std::vector<std::pair<double, double>>& samples);

}  // namespace mlab
