#pragma once

// Explicit Runge-Kutta integration of the (closed- or open-loop) network
//     x_i' = f_i(x_i) + g_i(x_i) u_i
// with the feedback recomputed at every stage.

#include "sgc/controller.hpp"
#include "sgc/dynamics.hpp"
#include "sgc/error.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace sgc {

enum class IntegrationMethod { RK4, RK45 };

struct IntegratorSpec {
    IntegrationMethod method = IntegrationMethod::RK4;
    double step = 1e-3;  // fixed step (RK4) or initial step (RK45)
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    double horizon = 200.0;

    void validate() const;

    friend bool operator==(const IntegratorSpec&, const IntegratorSpec&) = default;
};

/// Sampled closed-loop history. All per-sample sequences share one length.
struct Trajectory {
    std::vector<double> times;
    std::vector<NetworkState> states;
    std::vector<std::vector<double>> outputs;
    std::vector<ControlVector> controls;
    std::vector<std::vector<double>> lie_factors;
    std::vector<double> goal;
    std::vector<double> goal_rate_bound;
    /// True where saturation clipped any stage since the previous sample.
    std::vector<bool> clipped;

    /// Controller that produced the run; empty for open loop.
    std::optional<ControllerSpec> controller;

    std::size_t size() const noexcept { return times.size(); }
    std::size_t subsystem_count() const noexcept { return states.empty() ? 0 : states.front().size(); }
    bool any_clipped() const;
};

/// Numeric failure during simulate(); carries everything recorded so far.
class SimulationError : public NumericDomainError {
public:
    SimulationError(const std::string& what, double time, Trajectory partial)
        : NumericDomainError(what, time), partial_(std::move(partial)) {}

    const Trajectory& partial() const noexcept { return partial_; }

private:
    Trajectory partial_;
};

/// One classical RK4 step. An empty controller means u = 0.
NetworkState step_rk4(const NetworkSystem& net, const NetworkState& states,
                      const std::optional<ControllerSpec>& controller, double h);

/// RK4 step with a signed, non-zero step; negative dt steps backwards.
NetworkState advance_rk4(const NetworkSystem& net, const NetworkState& states,
                         const std::optional<ControllerSpec>& controller, double dt);

struct Rk45Result {
    NetworkState states;  // unchanged input when rejected
    bool accepted = false;
    double next_step = 0.0;
    double error_norm = 0.0;
};

/// One Dormand-Prince 5(4) attempt with RMS error norm and safety 0.9,
/// step factor clamped to [0.2, 5].
Rk45Result step_rk45(const NetworkSystem& net, const NetworkState& states,
                     const std::optional<ControllerSpec>& controller, double h, double rel_tol,
                     double abs_tol);

/// Integrates from t = 0 to integ.horizon, recording the initial state,
/// every record_every-th step and the final state.
Trajectory simulate(const NetworkSystem& net, const NetworkState& initial,
                    const std::optional<ControllerSpec>& controller, const IntegratorSpec& integ,
                    std::size_t record_every);

/// Smallest step RK45 may take before giving up.
inline constexpr double kMinAdaptiveStep = 1e-12;

}  // namespace sgc
