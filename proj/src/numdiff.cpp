#include "sgc/numdiff.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace sgc {

DerivativeEstimate ridders_derivative(const std::function<double(double)>& fn,
                                      double initial_step) {
    constexpr int kTable = 10;
    constexpr double kShrink = 1.4;
    constexpr double kShrink2 = kShrink * kShrink;
    constexpr double kSafe = 2.0;

    std::array<std::array<double, kTable>, kTable> a{};
    double h = initial_step;
    a[0][0] = (fn(h) - fn(-h)) / (2.0 * h);
    DerivativeEstimate best{a[0][0], std::numeric_limits<double>::max()};
    for (int i = 1; i < kTable; ++i) {
        h /= kShrink;
        a[0][i] = (fn(h) - fn(-h)) / (2.0 * h);
        double fac = kShrink2;
        for (int j = 1; j <= i; ++j) {
            a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
            fac *= kShrink2;
            const double err = std::max(std::abs(a[j][i] - a[j - 1][i]),
                                        std::abs(a[j][i] - a[j - 1][i - 1]));
            if (err <= best.error) best = {a[j][i], err};
        }
        // Higher order is making things worse; stop.
        if (std::abs(a[i][i] - a[i - 1][i - 1]) >= kSafe * best.error) break;
    }
    return best;
}

DerivativeEstimate directional_derivative(
    const std::function<double(std::span<const double>)>& fn, std::span<const double> x,
    std::span<const double> direction, double reach) {
    double dmax = 0.0;
    for (double d : direction) dmax = std::max(dmax, std::abs(d));
    if (dmax == 0.0) return {0.0, 0.0};
    std::vector<double> probe(x.size());
    auto along = [&](double s) {
        for (std::size_t i = 0; i < x.size(); ++i) probe[i] = x[i] + s * direction[i];
        return fn(probe);
    };
    return ridders_derivative(along, reach / dmax);
}

}  // namespace sgc
