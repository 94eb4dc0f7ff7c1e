#pragma once

// Sampled-point audits of model hypotheses and trajectory-level audits of
// the alignment theorem's conclusions. Every sampled check is reproducible
// from its seed.

#include "sgc/controller.hpp"
#include "sgc/dynamics.hpp"
#include "sgc/integrate.hpp"
#include "sgc/numdiff.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace sgc {

/// 64-bit LCG: x' = 6364136223846793005 x + 1442695040888963407 (mod 2^64).
/// Uniform doubles take the top 53 bits, so streams match across platforms.
class SampleStream {
public:
    using Engine = std::linear_congruential_engine<std::uint64_t, 6364136223846793005ULL,
                                                   1442695040888963407ULL, 0ULL>;

    explicit SampleStream(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
    Engine engine_;
};

struct Box {
    std::vector<double> lower;
    std::vector<double> upper;

    static Box cube(std::size_t dim, double lo, double hi) {
        return {std::vector<double>(dim, lo), std::vector<double>(dim, hi)};
    }
    std::size_t dim() const noexcept { return lower.size(); }
};

struct Sampler {
    Box box;
    std::size_t count = 1000;
    std::uint64_t seed = 1;

    /// All `count` points, drawn in order from SampleStream(seed).
    std::vector<std::vector<double>> draw() const;
};

struct AuditReport {
    std::string check;
    std::size_t samples = 0;
    std::size_t violations = 0;
    double worst = 0.0;                 // largest audited magnitude seen
    std::vector<double> worst_location;  // sample / state / time where it occurred
    bool passed = true;                  // violations == 0
    std::string note;
};

AuditReport check_conservative(const SubsystemModel& model, const Sampler& sampler,
                               double tol = 1e-10);

struct LyapunovCandidate {
    std::function<double(const NetworkState&)> value;
    std::string label;
};

/// V = Q, the cyclic alignment goal of the network outputs.
LyapunovCandidate goal_candidate(const NetworkSystem& net);

/// Fails wherever the uncontrolled-flow derivative of V exceeds tol * max(1, V);
/// the scaling keeps finite-difference roundoff on large V from counting.
/// The derivative is taken along the RK4 flow map of the uncontrolled network.
/// The sampler box spans the joint (flattened) network state.
AuditReport check_lyapunov_decrease(const NetworkSystem& net, const LyapunovCandidate& candidate,
                                    const Sampler& sampler, double tol = 1e-10);

/// Central differences (step 1e-6 max(1, |x_j|)) against the analytic
/// output gradient; relative 2-norm error with denominator floor 1e-9.
AuditReport check_gradient(const SubsystemModel& model, const Sampler& sampler,
                           double rel_tol = 1e-6);

struct Theorem1Thresholds {
    double q_monotone_slack = 1e-9;
    double u_final_tol = 1e-4;
    double tail_fraction = 0.1;
    double branch_tol = 1e-3;

    friend bool operator==(const Theorem1Thresholds&, const Theorem1Thresholds&) = default;
};

enum class Theorem1Branch { Goal, LieVanish, Both, Neither };

const char* to_string(Theorem1Branch branch);

struct Theorem1Audit {
    AuditReport monotone;
    AuditReport control_decay;
    AuditReport alternative;
    Theorem1Branch branch = Theorem1Branch::Neither;
    std::vector<std::size_t> vanishing_subsystems;  // zero-based

    bool passed() const { return monotone.passed && control_decay.passed && alternative.passed; }
};

/// Throws InvalidInput for open-loop or clipped trajectories.
Theorem1Audit audit_theorem1(const Trajectory& traj, const Theorem1Thresholds& thresholds = {});

/// Numerical dQ/dt along the closed-loop vector field at one state.
DerivativeEstimate numerical_goal_rate(const NetworkSystem& net, const NetworkState& states,
                                       const ControllerSpec& spec);

/// Compares the recorded analytic rate with numerical_goal_rate at every
/// unclipped sample where |rate| > floor.
AuditReport check_goal_rate_agreement(const NetworkSystem& net, const Trajectory& traj,
                                      double rel_tol = 1e-3, double floor = 1e-8);

/// Flags any state coordinate whose magnitude exceeds limit.
AuditReport check_bounded(const Trajectory& traj, double limit = 1e6);

struct RankProbe {
    std::vector<double> lie_sequence;  // Z, L_f Z, ..., L_f^depth Z with Z = L_g h
    std::vector<double> singular_values;
    std::size_t rank = 0;
    bool z_vanishes = false;
    bool condition_met = false;  // rank equals the output dimension (1)
};

/// Advisory numeric probe of span{Z, L_f Z, L_f^2 Z, ...}; depth <= 4.
RankProbe probe_rank_condition(const SubsystemModel& model, const StateVector& x,
                               std::size_t depth);

}  // namespace sgc
