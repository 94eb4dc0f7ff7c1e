#pragma once

// Affine-in-control subsystem models  x' = f(x) + g(x) u,  y = h(x)
// with scalar input and scalar output, plus a small zoo of conservative
// models whose output is an invariant of the uncontrolled flow.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace sgc {

/// Finite real state vector of a single subsystem.
class StateVector {
public:
    StateVector() = default;
    /// Throws NumericDomainError if any entry is NaN or Inf.
    explicit StateVector(std::vector<double> values);
    StateVector(std::initializer_list<double> values);

    std::size_t dim() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }

    auto begin() const noexcept { return values_.begin(); }
    auto end() const noexcept { return values_.end(); }

    friend bool operator==(const StateVector&, const StateVector&) = default;

private:
    std::vector<double> values_;
};

using VectorField = std::function<std::vector<double>(std::span<const double>)>;
using ScalarField = std::function<double(std::span<const double>)>;

/// Single-input single-output affine subsystem. Immutable once built.
class SubsystemModel {
public:
    SubsystemModel(std::size_t state_dim, VectorField drift, VectorField input_map,
                   ScalarField output, VectorField output_gradient, std::string label);

    std::size_t state_dim() const noexcept { return state_dim_; }
    static constexpr std::size_t input_dim() noexcept { return 1; }
    const std::string& label() const noexcept { return label_; }

    // Raw access for hot loops; no shape or finiteness checks.
    const VectorField& drift() const noexcept { return drift_; }
    const VectorField& input_map() const noexcept { return input_map_; }
    const ScalarField& output() const noexcept { return output_; }
    const VectorField& output_gradient() const noexcept { return output_gradient_; }

private:
    std::size_t state_dim_;
    VectorField drift_;
    VectorField input_map_;
    ScalarField output_;
    VectorField output_gradient_;
    std::string label_;
};

/// Ordered collection of subsystems with cyclic neighbour indexing.
class NetworkSystem {
public:
    explicit NetworkSystem(std::vector<SubsystemModel> subsystems);

    std::size_t size() const noexcept { return subsystems_.size(); }
    const SubsystemModel& operator[](std::size_t i) const { return subsystems_.at(i); }
    auto begin() const noexcept { return subsystems_.begin(); }
    auto end() const noexcept { return subsystems_.end(); }

    /// Zero-based cyclic neighbour: index (i + offset) mod N.
    std::size_t neighbor_of(std::size_t i, long offset) const;

    /// Sum of subsystem state dimensions.
    std::size_t total_dim() const noexcept;

private:
    std::vector<SubsystemModel> subsystems_;
};

using NetworkState = std::vector<StateVector>;

std::vector<double> eval_drift(const SubsystemModel& model, const StateVector& x);
std::vector<double> eval_input_map(const SubsystemModel& model, const StateVector& x);
double eval_output(const SubsystemModel& model, const StateVector& x);
std::vector<double> eval_output_gradient(const SubsystemModel& model, const StateVector& x);

/// L_f h = grad h . f, the output rate under zero control.
double lie_drift_output(const SubsystemModel& model, const StateVector& x);
/// L_g h = grad h . g, the sensitivity of the output rate to the input.
double lie_input_output(const SubsystemModel& model, const StateVector& x);

/// Harmonic oscillator, state (q, p), h = (omega^2 q^2 + p^2) / 2.
SubsystemModel make_oscillator(double omega);
/// Planar pendulum, state (angle, angular momentum), h = total energy.
SubsystemModel make_pendulum(double mass, double length, double gravity);
/// x' = u, h = x.
SubsystemModel make_integrator();
SubsystemModel make_custom(std::size_t state_dim, VectorField drift, VectorField input_map,
                           ScalarField output, VectorField output_gradient, std::string label);

/// Validates that every state matches its subsystem dimension.
void check_network_state(const NetworkSystem& net, const NetworkState& states);

}  // namespace sgc
