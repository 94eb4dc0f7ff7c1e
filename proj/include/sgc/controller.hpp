#pragma once

// Speed-gradient feedback laws.
//
// Alignment: drives the outputs y_1..y_N of a network towards a common value
// by descending the cyclic goal
//     Q = sum_i (y_i - y_{i+1})^2,   y_{N+1} = y_1,
// with the law
//     u_i = -gamma * (2 psi_i) * (2 y_i - y_{i-1} - y_{i+1}),   psi_i = L_{g_i} h_i.
// For conservative subsystems (L_{f_i} h_i = 0) the closed loop satisfies
//     dQ/dt = -gamma * sum_i (2 psi_i)^2 (2 y_i - y_{i-1} - y_{i+1})^2 <= 0.
//
// Tracking: single subsystem, goal Q = (h - y*)^2 / 2, law u = -gamma psi (h - y*).

#include "sgc/dynamics.hpp"

#include <optional>
#include <span>
#include <vector>

namespace sgc {

enum class ControllerKind { Alignment, Tracking };

struct ControllerSpec {
    ControllerKind kind = ControllerKind::Alignment;
    double gain = 0.5;
    std::optional<double> target;      // required for Tracking
    std::optional<double> saturation;  // |u_i| <= saturation when set

    static ControllerSpec alignment(double gain) { return {ControllerKind::Alignment, gain, {}, {}}; }
    static ControllerSpec tracking(double gain, double target) {
        return {ControllerKind::Tracking, gain, target, {}};
    }

    /// Throws InvalidParameter on a non-positive gain/saturation or a missing target.
    void validate() const;

    friend bool operator==(const ControllerSpec&, const ControllerSpec&) = default;
};

/// One scalar input per subsystem.
using ControlVector = std::vector<double>;

/// 2 y_i - y_{i-1} - y_{i+1} with zero-based cyclic indices. Requires N >= 2.
double cyclic_error(std::span<const double> outputs, std::size_t i);

/// Cyclic sum of squared consecutive differences. Requires N >= 2.
double goal_value(std::span<const double> outputs);

/// (y - y*)^2 / 2.
double tracking_goal(double output, double target);

/// Goal of the closed loop described by spec, evaluated on the outputs.
double closed_loop_goal(const ControllerSpec& spec, std::span<const double> outputs);

ControlVector alignment_control(const NetworkSystem& net, const NetworkState& states,
                                const ControllerSpec& spec);

double tracking_control(const SubsystemModel& model, const StateVector& x,
                        const ControllerSpec& spec);

/// Analytic closed-loop dQ/dt for conservative subsystems, unclipped control.
/// Dispatches on spec.kind; for Tracking the network must have one subsystem.
double goal_rate(const NetworkSystem& net, const NetworkState& states, const ControllerSpec& spec);

/// Everything the feedback law computes at one network state.
struct FeedbackEvaluation {
    std::vector<double> outputs;
    std::vector<double> lie_factors;  // psi_i = L_{g_i} h_i
    ControlVector controls;           // after saturation
    double goal = 0.0;
    double goal_rate = 0.0;           // unclipped analytic rate
    bool clipped = false;
};

/// Evaluates the law on raw per-subsystem state slices without validation.
/// Used in integrator stages; public entry points validate and call this.
FeedbackEvaluation evaluate_feedback(const NetworkSystem& net,
                                     std::span<const std::span<const double>> states,
                                     const ControllerSpec& spec);

}  // namespace sgc
