#include "sgc/dynamics.hpp"

#include "sgc/error.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace sgc {

namespace {

bool all_finite(std::span<const double> v) {
    for (double e : v) {
        if (!std::isfinite(e)) return false;
    }
    return true;
}

void check_dim(const SubsystemModel& model, const StateVector& x) {
    if (x.dim() != model.state_dim()) {
        throw InvalidInput(model.label() + ": state has dimension " + std::to_string(x.dim()) +
                           ", model expects " + std::to_string(model.state_dim()));
    }
}

std::vector<double> checked_field(const SubsystemModel& model, const VectorField& field,
                                  const StateVector& x, const char* what) {
    check_dim(model, x);
    std::vector<double> out = field(x.values());
    if (out.size() != model.state_dim()) {
        throw InvalidInput(model.label() + ": " + what + " returned wrong length");
    }
    if (!all_finite(out)) {
        throw NumericDomainError(model.label() + ": " + what + " is not finite");
    }
    return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw InvalidParameter(std::string(name) + " must be a positive finite number");
    }
}

}  // namespace

StateVector::StateVector(std::vector<double> values) : values_(std::move(values)) {
    if (!all_finite(values_)) throw NumericDomainError("state vector has non-finite entries");
}

StateVector::StateVector(std::initializer_list<double> values)
    : StateVector(std::vector<double>(values)) {}

SubsystemModel::SubsystemModel(std::size_t state_dim, VectorField drift, VectorField input_map,
                               ScalarField output, VectorField output_gradient, std::string label)
    : state_dim_(state_dim),
      drift_(std::move(drift)),
      input_map_(std::move(input_map)),
      output_(std::move(output)),
      output_gradient_(std::move(output_gradient)),
      label_(std::move(label)) {
    if (state_dim_ == 0) throw InvalidParameter("state_dim must be positive");
    if (!drift_ || !input_map_ || !output_ || !output_gradient_) {
        throw InvalidParameter(label_ + ": all model callables must be set");
    }
}

NetworkSystem::NetworkSystem(std::vector<SubsystemModel> subsystems)
    : subsystems_(std::move(subsystems)) {
    if (subsystems_.empty()) throw InvalidParameter("network needs at least one subsystem");
}

std::size_t NetworkSystem::neighbor_of(std::size_t i, long offset) const {
    const long n = static_cast<long>(subsystems_.size());
    long j = (static_cast<long>(i) + offset) % n;
    if (j < 0) j += n;
    return static_cast<std::size_t>(j);
}

std::size_t NetworkSystem::total_dim() const noexcept {
    std::size_t n = 0;
    for (const auto& s : subsystems_) n += s.state_dim();
    return n;
}

std::vector<double> eval_drift(const SubsystemModel& model, const StateVector& x) {
    return checked_field(model, model.drift(), x, "drift");
}

std::vector<double> eval_input_map(const SubsystemModel& model, const StateVector& x) {
    return checked_field(model, model.input_map(), x, "input map");
}

std::vector<double> eval_output_gradient(const SubsystemModel& model, const StateVector& x) {
    return checked_field(model, model.output_gradient(), x, "output gradient");
}

double eval_output(const SubsystemModel& model, const StateVector& x) {
    check_dim(model, x);
    const double y = model.output()(x.values());
    if (!std::isfinite(y)) throw NumericDomainError(model.label() + ": output is not finite");
    return y;
}

double lie_drift_output(const SubsystemModel& model, const StateVector& x) {
    return dot(eval_output_gradient(model, x), eval_drift(model, x));
}

double lie_input_output(const SubsystemModel& model, const StateVector& x) {
    return dot(eval_output_gradient(model, x), eval_input_map(model, x));
}

SubsystemModel make_oscillator(double omega) {
    require_positive(omega, "omega");
    const double w2 = omega * omega;
    return SubsystemModel(
        2,
        [w2](std::span<const double> x) { return std::vector<double>{x[1], -(w2 * x[0])}; },
        [](std::span<const double>) { return std::vector<double>{0.0, 1.0}; },
        [w2](std::span<const double> x) { return 0.5 * (w2 * x[0] * x[0] + x[1] * x[1]); },
        [w2](std::span<const double> x) { return std::vector<double>{w2 * x[0], x[1]}; },
        "oscillator(omega=" + std::to_string(omega) + ")");
}

SubsystemModel make_pendulum(double mass, double length, double gravity) {
    require_positive(mass, "mass");
    require_positive(length, "length");
    require_positive(gravity, "gravity");
    const double inertia = mass * length * length;
    const double mgl = mass * gravity * length;
    // Angle is deliberately not wrapped; h depends on cos(q) only.
    return SubsystemModel(
        2,
        [=](std::span<const double> x) {
            return std::vector<double>{x[1] / inertia, -(mgl * std::sin(x[0]))};
        },
        [](std::span<const double>) { return std::vector<double>{0.0, 1.0}; },
        [=](std::span<const double> x) {
            return x[1] * x[1] / (2.0 * inertia) + mgl * (1.0 - std::cos(x[0]));
        },
        [=](std::span<const double> x) {
            return std::vector<double>{mgl * std::sin(x[0]), x[1] / inertia};
        },
        "pendulum(m=" + std::to_string(mass) + ",l=" + std::to_string(length) +
            ",g=" + std::to_string(gravity) + ")");
}

SubsystemModel make_integrator() {
    return SubsystemModel(
        1, [](std::span<const double>) { return std::vector<double>{0.0}; },
        [](std::span<const double>) { return std::vector<double>{1.0}; },
        [](std::span<const double> x) { return x[0]; },
        [](std::span<const double>) { return std::vector<double>{1.0}; }, "integrator");
}

SubsystemModel make_custom(std::size_t state_dim, VectorField drift, VectorField input_map,
                           ScalarField output, VectorField output_gradient, std::string label) {
    return SubsystemModel(state_dim, std::move(drift), std::move(input_map), std::move(output),
                          std::move(output_gradient), std::move(label));
}

void check_network_state(const NetworkSystem& net, const NetworkState& states) {
    if (states.size() != net.size()) {
        throw InvalidInput("expected " + std::to_string(net.size()) + " subsystem states, got " +
                           std::to_string(states.size()));
    }
    for (std::size_t i = 0; i < net.size(); ++i) {
        if (states[i].dim() != net[i].state_dim()) {
            throw InvalidInput("subsystem " + std::to_string(i + 1) + " (" + net[i].label() +
                               ") expects dimension " + std::to_string(net[i].state_dim()));
        }
    }
}

}  // namespace sgc
