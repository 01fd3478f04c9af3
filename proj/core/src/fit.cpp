#include "mlab/fit.hpp"

#include <cmath>
#include <stdexcept>

namespace mlab {

FitResult fit_loglog(const std::vector<std::pair<double, double>>& samples) {
    if (samples.size() < 4) {
        throw std::invalid_argument("fit_loglog: need at least 4 samples, got " +
                                    std::to_string(samples.size()));
    }
    std::vector<double> lx(samples.size());
    std::vector<double> ly(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto [x, y] = samples[i];
        if (!(x > 0.0) || !(y > 0.0) || !std::isfinite(x) || !std::isfinite(y)) {
            throw std::invalid_argument("fit_loglog: samples must be finite and positive");
        }
        lx[i] = std::log(x);
        ly[i] = std::log(y);
    }

    const double n = static_cast<double>(samples.size());
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
    }
    const double mx = sx / n;
    const double my = sy / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (sxx <= 0.0) {
        throw std::invalid_argument("fit_loglog: sample abscissae must not all coincide");
    }

    FitResult out;
    out.slope = sxy / sxx;
    out.intercept = my - out.slope * mx;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double predicted = std::exp(out.intercept + out.slope * lx[i]);
        const double rel = std::abs(samples[i].second - predicted) / predicted;
        out.residual = std::max(out.residual, rel);
    }
    return out;
}

}  // namespace mlab
