#pragma once

#include <functional>
#include <span>
#include <vector>

namespace sgc {

struct DerivativeEstimate {
    double value = 0.0;
    double error = 0.0;  // extrapolation error estimate
};

/// Ridders' extrapolated central difference of a scalar function of one
/// variable at 0, starting from step initial_step.
DerivativeEstimate ridders_derivative(const std::function<double(double)>& fn,
                                      double initial_step);

/// d/ds fn(x + s d) at s = 0 by Ridders' method. The initial step moves the
/// argument by `reach` in max-norm. Exact zero when d vanishes.
DerivativeEstimate directional_derivative(
    const std::function<double(std::span<const double>)>& fn, std::span<const double> x,
    std::span<const double> direction, double reach = 0.1);

}  // namespace sgc
