#include "sgc/controller.hpp"

#include "sgc/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sgc {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void require_network(std::size_t n) {
    if (n < 2) throw InvalidParameter("Alignment requires N >= 2 subsystems");
}

std::vector<std::span<const double>> slices(const NetworkState& states) {
    std::vector<std::span<const double>> out;
    out.reserve(states.size());
    for (const auto& s : states) out.push_back(s.values());
    return out;
}

FeedbackEvaluation checked_feedback(const NetworkSystem& net, const NetworkState& states,
                                    const ControllerSpec& spec) {
    spec.validate();
    check_network_state(net, states);
    FeedbackEvaluation ev = evaluate_feedback(net, slices(states), spec);
    for (double u : ev.controls) {
        if (!std::isfinite(u)) throw NumericDomainError("control is not finite");
    }
    return ev;
}

}  // namespace

void ControllerSpec::validate() const {
    if (!(gain > 0.0) || !std::isfinite(gain)) {
        throw InvalidParameter("gain must be a positive finite number");
    }
    if (saturation && (!(*saturation > 0.0) || !std::isfinite(*saturation))) {
        throw InvalidParameter("saturation must be a positive finite number");
    }
    if (kind == ControllerKind::Tracking && (!target || !std::isfinite(*target))) {
        throw InvalidParameter("Tracking requires a finite target");
    }
}

double cyclic_error(std::span<const double> outputs, std::size_t i) {
    const std::size_t n = outputs.size();
    require_network(n);
    if (i >= n) throw InvalidInput("cyclic_error: index out of range");
    const double prev = outputs[(i + n - 1) % n];
    const double next = outputs[(i + 1) % n];
    return 2.0 * outputs[i] - prev - next;
}

double goal_value(std::span<const double> outputs) {
    const std::size_t n = outputs.size();
    require_network(n);
    double q = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = outputs[i] - outputs[(i + 1) % n];
        q += d * d;
    }
    return q;
}

double tracking_goal(double output, double target) {
    const double e = output - target;
    return 0.5 * e * e;
}

double closed_loop_goal(const ControllerSpec& spec, std::span<const double> outputs) {
    if (spec.kind == ControllerKind::Tracking) {
        if (outputs.size() != 1) throw InvalidInput("Tracking governs exactly one subsystem");
        return tracking_goal(outputs[0], spec.target.value());
    }
    return goal_value(outputs);
}

FeedbackEvaluation evaluate_feedback(const NetworkSystem& net,
                                     std::span<const std::span<const double>> states,
                                     const ControllerSpec& spec) {
    const std::size_t n = net.size();
    FeedbackEvaluation ev;
    ev.outputs.resize(n);
    ev.lie_factors.resize(n);
    ev.controls.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const SubsystemModel& m = net[i];
        ev.outputs[i] = m.output()(states[i]);
        ev.lie_factors[i] = dot(m.output_gradient()(states[i]), m.input_map()(states[i]));
    }

    double rate = 0.0;
    if (spec.kind == ControllerKind::Tracking) {
        if (n != 1) throw InvalidInput("Tracking governs exactly one subsystem");
        const double e = ev.outputs[0] - *spec.target;
        const double psi = ev.lie_factors[0];
        ev.controls[0] = -spec.gain * psi * e;
        ev.goal = tracking_goal(ev.outputs[0], *spec.target);
        rate = -spec.gain * psi * psi * e * e;
    } else {
        require_network(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double factor = 2.0 * ev.lie_factors[i];
            const double err = cyclic_error(ev.outputs, i);
            ev.controls[i] = -spec.gain * factor * err;
            rate += factor * factor * err * err;
        }
        rate *= -spec.gain;
        ev.goal = goal_value(ev.outputs);
    }
    ev.goal_rate = rate;

    if (spec.saturation) {
        const double cap = *spec.saturation;
        for (double& u : ev.controls) {
            if (std::abs(u) > cap) {
                u = std::clamp(u, -cap, cap);
                ev.clipped = true;
            }
        }
    }
    return ev;
}

ControlVector alignment_control(const NetworkSystem& net, const NetworkState& states,
                                const ControllerSpec& spec) {
    if (spec.kind != ControllerKind::Alignment) {
        throw InvalidParameter("alignment_control needs an Alignment controller");
    }
    require_network(net.size());
    return checked_feedback(net, states, spec).controls;
}

double tracking_control(const SubsystemModel& model, const StateVector& x,
                        const ControllerSpec& spec) {
    if (spec.kind != ControllerKind::Tracking) {
        throw InvalidParameter("tracking_control needs a Tracking controller");
    }
    return checked_feedback(NetworkSystem({model}), {x}, spec).controls[0];
}

double goal_rate(const NetworkSystem& net, const NetworkState& states, const ControllerSpec& spec) {
    if (spec.kind == ControllerKind::Alignment) require_network(net.size());
    return checked_feedback(net, states, spec).goal_rate;
}

}  // namespace sgc
