#include "sgc/diagnostics.hpp"

#include "sgc/error.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <sstream>

namespace sgc {

namespace {

// Initial Ridders step for derivatives taken along the RK4 flow map.
constexpr double kFlowStep = 0.005;

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

void require_sampler_dim(const Sampler& sampler, std::size_t dim, const std::string& what) {
    if (sampler.box.dim() != dim || sampler.box.upper.size() != dim) {
        throw InvalidInput(what + ": sampler box has dimension " +
                           std::to_string(sampler.box.dim()) + ", expected " + std::to_string(dim));
    }
}

// Joint state <-> per-subsystem states.
NetworkState split_state(const NetworkSystem& net, std::span<const double> flat) {
    NetworkState out;
    std::size_t off = 0;
    for (const auto& m : net) {
        out.emplace_back(std::vector<double>(flat.begin() + off, flat.begin() + off + m.state_dim()));
        off += m.state_dim();
    }
    return out;
}


void finish(AuditReport& r) { r.passed = r.violations == 0; }

void observe_worst(AuditReport& r, double value, std::vector<double> where, bool first) {
    if (first || value > r.worst) {
        r.worst = value;
        r.worst_location = std::move(where);
    }
}

// One-sided tail: samples with t >= (1 - fraction) * t_end.
std::size_t tail_start(const Trajectory& traj, double fraction) {
    const double t_end = traj.times.back();
    const double cut = (1.0 - fraction) * t_end;
    std::size_t k = 0;
    while (k + 1 < traj.size() && traj.times[k] < cut) ++k;
    return k;
}

}  // namespace

std::vector<std::vector<double>> Sampler::draw() const {
    if (box.upper.size() != box.lower.size()) throw InvalidInput("sampler box bounds disagree");
    for (std::size_t j = 0; j < box.dim(); ++j) {
        if (!(box.lower[j] <= box.upper[j])) throw InvalidInput("sampler box has lower > upper");
    }
    SampleStream rng(seed);
    std::vector<std::vector<double>> pts(count, std::vector<double>(box.dim()));
    for (auto& p : pts) {
        for (std::size_t j = 0; j < box.dim(); ++j) p[j] = rng.uniform(box.lower[j], box.upper[j]);
    }
    return pts;
}

AuditReport check_conservative(const SubsystemModel& model, const Sampler& sampler, double tol) {
    require_sampler_dim(sampler, model.state_dim(), "check_conservative");
    AuditReport r;
    r.check = "conservative:" + model.label();
    bool first = true;
    for (auto& p : sampler.draw()) {
        const double v = std::abs(lie_drift_output(model, StateVector(p)));
        if (v > tol) ++r.violations;
        observe_worst(r, v, p, first);
        first = false;
        ++r.samples;
    }
    finish(r);
    return r;
}

LyapunovCandidate goal_candidate(const NetworkSystem& net) {
    return {[net](const NetworkState& s) {
                std::vector<double> y(net.size());
                for (std::size_t i = 0; i < net.size(); ++i) y[i] = eval_output(net[i], s[i]);
                return goal_value(y);
            },
            "goal"};
}

AuditReport check_lyapunov_decrease(const NetworkSystem& net, const LyapunovCandidate& candidate,
                                    const Sampler& sampler, double tol) {
    require_sampler_dim(sampler, net.total_dim(), "check_lyapunov_decrease");
    AuditReport r;
    r.check = "lyapunov_decrease:" + candidate.label;
    bool first = true;
    for (auto& p : sampler.draw()) {
        const NetworkState states = split_state(net, p);
        const double v = candidate.value(states);
        if (v < 0.0) throw InvalidInput("Lyapunov candidate is negative at a sampled state");
        // Along the uncontrolled RK4 flow map, as in numerical_goal_rate.
        auto value_after = [&](double s) {
            return candidate.value(advance_rk4(net, states, std::nullopt, s));
        };
        const double rate = ridders_derivative(value_after, kFlowStep).value;
        if (rate > tol * std::max(1.0, v)) ++r.violations;
        observe_worst(r, rate, p, first);
        first = false;
        ++r.samples;
    }
    finish(r);
    return r;
}

AuditReport check_gradient(const SubsystemModel& model, const Sampler& sampler, double rel_tol) {
    const std::size_t n = model.state_dim();
    require_sampler_dim(sampler, n, "check_gradient");
    AuditReport r;
    r.check = "gradient:" + model.label();
    bool first = true;
    for (auto& p : sampler.draw()) {
        const StateVector x(p);
        const auto grad = eval_output_gradient(model, x);
        std::vector<double> fd(n), probe = p;
        for (std::size_t j = 0; j < n; ++j) {
            const double h = 1e-6 * std::max(1.0, std::abs(p[j]));
            const double up = p[j] + h;
            const double down = p[j] - h;
            probe[j] = up;
            const double f_up = eval_output(model, StateVector(probe));
            probe[j] = down;
            const double f_down = eval_output(model, StateVector(probe));
            probe[j] = p[j];
            fd[j] = (f_up - f_down) / (up - down);
        }
        std::vector<double> diff(n);
        for (std::size_t j = 0; j < n; ++j) diff[j] = fd[j] - grad[j];
        const double rel = norm2(diff) / std::max(norm2(grad), 1e-9);
        if (rel > rel_tol) ++r.violations;
        observe_worst(r, rel, p, first);
        first = false;
        ++r.samples;
    }
    finish(r);
    return r;
}

const char* to_string(Theorem1Branch branch) {
    switch (branch) {
        case Theorem1Branch::Goal: return "goal";
        case Theorem1Branch::LieVanish: return "lie_vanish";
        case Theorem1Branch::Both: return "both";
        case Theorem1Branch::Neither: return "neither";
    }
    return "neither";
}

Theorem1Audit audit_theorem1(const Trajectory& traj, const Theorem1Thresholds& thresholds) {
    if (!traj.controller) throw InvalidInput("audit requires a closed-loop trajectory");
    if (traj.any_clipped()) throw InvalidInput("audit undefined for a saturated trajectory");
    if (traj.size() < 2) throw InvalidInput("audit needs at least two samples");
    if (!(thresholds.tail_fraction > 0.0 && thresholds.tail_fraction <= 1.0)) {
        throw InvalidParameter("tail_fraction must lie in (0, 1]");
    }
    const ControllerSpec& spec = *traj.controller;
    const std::size_t n = traj.subsystem_count();
    Theorem1Audit out;

    AuditReport& mono = out.monotone;
    mono.check = "theorem1.monotone";
    for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
        const double rise = traj.goal[k + 1] - traj.goal[k];
        if (rise > thresholds.q_monotone_slack) ++mono.violations;
        observe_worst(mono, std::max(rise, 0.0), {traj.times[k + 1]}, k == 0);
        ++mono.samples;
    }
    finish(mono);

    const std::size_t tail = tail_start(traj, thresholds.tail_fraction);

    AuditReport& decay = out.control_decay;
    decay.check = "theorem1.control_decay";
    double goal_err = 0.0;
    std::vector<double> lie_max(n, 0.0);
    for (std::size_t k = tail; k < traj.size(); ++k) {
        double umax = 0.0;
        for (double u : traj.controls[k]) umax = std::max(umax, std::abs(u));
        if (umax > thresholds.u_final_tol) ++decay.violations;
        observe_worst(decay, umax, {traj.times[k]}, k == tail);
        ++decay.samples;

        const auto& y = traj.outputs[k];
        if (spec.kind == ControllerKind::Tracking) {
            goal_err = std::max(goal_err, std::abs(y[0] - *spec.target));
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                goal_err = std::max(goal_err, std::abs(cyclic_error(y, i)));
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            lie_max[i] = std::max(lie_max[i], std::abs(traj.lie_factors[k][i]));
        }
    }
    finish(decay);

    const bool goal_met = goal_err <= thresholds.branch_tol;
    for (std::size_t i = 0; i < n; ++i) {
        if (lie_max[i] <= thresholds.branch_tol) out.vanishing_subsystems.push_back(i);
    }
    const bool lie_met = !out.vanishing_subsystems.empty();
    out.branch = goal_met && lie_met ? Theorem1Branch::Both
                 : goal_met          ? Theorem1Branch::Goal
                 : lie_met           ? Theorem1Branch::LieVanish
                                     : Theorem1Branch::Neither;

    AuditReport& alt = out.alternative;
    alt.check = "theorem1.alternative";
    alt.samples = traj.size() - tail;
    alt.worst = goal_err;
    alt.worst_location = lie_max;
    alt.violations = out.branch == Theorem1Branch::Neither ? 1 : 0;
    std::ostringstream note;
    note << "branch=" << to_string(out.branch);
    if (lie_met) {
        note << "; vanishing lie factor in subsystem(s)";
        for (auto i : out.vanishing_subsystems) note << ' ' << i + 1;
    }
    alt.note = note.str();
    finish(alt);
    return out;
}

DerivativeEstimate numerical_goal_rate(const NetworkSystem& net, const NetworkState& states,
                                       const ControllerSpec& spec) {
    spec.validate();
    check_network_state(net, states);
    // Differentiate Q along the RK4 flow map s -> Phi_s(x). Its derivative at
    // s = 0 is the closed-loop field, and unlike a straight line through x it
    // keeps the outputs on their (nearly invariant) level sets.
    auto goal_after = [&](double s) {
        const NetworkState moved = advance_rk4(net, states, spec, s);
        std::vector<double> y(net.size());
        for (std::size_t i = 0; i < net.size(); ++i) y[i] = net[i].output()(moved[i].values());
        return closed_loop_goal(spec, y);
    };
    return ridders_derivative(goal_after, kFlowStep);
}

AuditReport check_goal_rate_agreement(const NetworkSystem& net, const Trajectory& traj,
                                      double rel_tol, double floor) {
    if (!traj.controller) throw InvalidInput("goal-rate audit requires a closed-loop trajectory");
    AuditReport r;
    r.check = "goal_rate_agreement";
    bool first = true;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const double bound = traj.goal_rate_bound[k];
        if (traj.clipped[k] || std::abs(bound) <= floor) continue;
        const double numeric = numerical_goal_rate(net, traj.states[k], *traj.controller).value;
        const double rel = std::abs(numeric - bound) / std::abs(bound);
        if (rel > rel_tol) ++r.violations;
        observe_worst(r, rel, {traj.times[k]}, first);
        first = false;
        ++r.samples;
    }
    finish(r);
    return r;
}

AuditReport check_bounded(const Trajectory& traj, double limit) {
    AuditReport r;
    r.check = "bounded";
    for (std::size_t k = 0; k < traj.size(); ++k) {
        double m = 0.0;
        for (const auto& s : traj.states[k]) {
            for (double v : s) m = std::max(m, std::abs(v));
        }
        if (m > limit) ++r.violations;
        observe_worst(r, m, {traj.times[k]}, k == 0);
        ++r.samples;
    }
    finish(r);
    return r;
}

RankProbe probe_rank_condition(const SubsystemModel& model, const StateVector& x,
                               std::size_t depth) {
    if (depth > 4) throw InvalidParameter("rank probe depth must be at most 4");
    if (x.dim() != model.state_dim()) throw InvalidInput("rank probe: state dimension mismatch");
    constexpr double kStep = 1e-3;
    const std::size_t n = model.state_dim();

    // L_f^k Z at y by nested central differences along f(y).
    std::function<double(std::span<const double>, std::size_t)> lie =
        [&](std::span<const double> y, std::size_t k) -> double {
        if (k == 0) return dot(model.output_gradient()(y), model.input_map()(y));
        const auto f = model.drift()(y);
        std::vector<double> up(n), down(n);
        for (std::size_t j = 0; j < n; ++j) {
            up[j] = y[j] + kStep * f[j];
            down[j] = y[j] - kStep * f[j];
        }
        return (lie(up, k - 1) - lie(down, k - 1)) / (2.0 * kStep);
    };

    RankProbe out;
    for (std::size_t k = 0; k <= depth; ++k) out.lie_sequence.push_back(lie(x.values(), k));
    // The stacked matrix is a single column, so its only singular value is its norm.
    const double sigma = norm2(out.lie_sequence);
    out.singular_values = {sigma};
    constexpr double kAbsFloor = 1e-12;
    for (double s : out.singular_values) {
        if (s > kAbsFloor && s > 1e-8 * sigma) ++out.rank;
    }
    out.z_vanishes = std::abs(out.lie_sequence.front()) <= kAbsFloor;
    out.condition_met = out.rank == 1;
    return out;
}

}  // namespace sgc
