#include "sgc/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

namespace sgc {

namespace {

// Flat view of the network state used inside the stepping loops.
class ClosedLoop {
public:
    ClosedLoop(const NetworkSystem& net, const std::optional<ControllerSpec>& controller)
        : net_(net), controller_(controller) {
        offsets_.reserve(net.size() + 1);
        std::size_t off = 0;
        for (const auto& m : net) {
            offsets_.push_back(off);
            off += m.state_dim();
        }
        offsets_.push_back(off);
    }

    std::size_t dim() const { return offsets_.back(); }

    std::vector<std::span<const double>> split(std::span<const double> flat) const {
        std::vector<std::span<const double>> out(net_.size());
        for (std::size_t i = 0; i < net_.size(); ++i) {
            out[i] = flat.subspan(offsets_[i], offsets_[i + 1] - offsets_[i]);
        }
        return out;
    }

    std::vector<double> flatten(const NetworkState& states) const {
        std::vector<double> flat;
        flat.reserve(dim());
        for (const auto& s : states) flat.insert(flat.end(), s.begin(), s.end());
        return flat;
    }

    NetworkState unflatten(std::span<const double> flat) const {
        NetworkState out;
        out.reserve(net_.size());
        for (std::size_t i = 0; i < net_.size(); ++i) {
            out.emplace_back(std::vector<double>(flat.begin() + offsets_[i],
                                                 flat.begin() + offsets_[i + 1]));
        }
        return out;
    }

    // x' = f(x) + g(x) u(x). Sets clipped when saturation bit.
    void rhs(std::span<const double> flat, std::span<double> out, bool& clipped) const {
        const auto parts = split(flat);
        ControlVector u(net_.size(), 0.0);
        if (controller_) {
            FeedbackEvaluation ev = evaluate_feedback(net_, parts, *controller_);
            u = std::move(ev.controls);
            clipped = clipped || ev.clipped;
        }
        for (std::size_t i = 0; i < net_.size(); ++i) {
            const auto f = net_[i].drift()(parts[i]);
            const auto g = net_[i].input_map()(parts[i]);
            for (std::size_t k = 0; k < f.size(); ++k) {
                out[offsets_[i] + k] = f[k] + g[k] * u[i];
            }
        }
    }

    FeedbackEvaluation observe(std::span<const double> flat) const {
        const auto parts = split(flat);
        if (controller_) return evaluate_feedback(net_, parts, *controller_);
        FeedbackEvaluation ev;
        const std::size_t n = net_.size();
        ev.outputs.resize(n);
        ev.lie_factors.resize(n);
        ev.controls.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& m = net_[i];
            ev.outputs[i] = m.output()(parts[i]);
            const auto grad = m.output_gradient()(parts[i]);
            const auto g = m.input_map()(parts[i]);
            double s = 0.0;
            for (std::size_t k = 0; k < g.size(); ++k) s += grad[k] * g[k];
            ev.lie_factors[i] = s;
        }
        ev.goal = n >= 2 ? goal_value(ev.outputs) : 0.0;
        return ev;
    }

private:
    const NetworkSystem& net_;
    const std::optional<ControllerSpec>& controller_;
    std::vector<std::size_t> offsets_;
};

bool finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double e) { return std::isfinite(e); });
}

std::vector<double> rk4_flat(const ClosedLoop& sys, std::span<const double> x, double h,
                             bool& clipped) {
    const std::size_t n = x.size();
    std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
    sys.rhs(x, k1, clipped);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
    sys.rhs(tmp, k2, clipped);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
    sys.rhs(tmp, k3, clipped);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * k3[i];
    sys.rhs(tmp, k4, clipped);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return out;
}

// Dormand-Prince 5(4) tableau.
constexpr double c_a21 = 1.0 / 5.0;
constexpr double c_a31 = 3.0 / 40.0, c_a32 = 9.0 / 40.0;
constexpr double c_a41 = 44.0 / 45.0, c_a42 = -56.0 / 15.0, c_a43 = 32.0 / 9.0;
constexpr double c_a51 = 19372.0 / 6561.0, c_a52 = -25360.0 / 2187.0, c_a53 = 64448.0 / 6561.0,
                 c_a54 = -212.0 / 729.0;
constexpr double c_a61 = 9017.0 / 3168.0, c_a62 = -355.0 / 33.0, c_a63 = 46732.0 / 5247.0,
                 c_a64 = 49.0 / 176.0, c_a65 = -5103.0 / 18656.0;
constexpr double c_b1 = 35.0 / 384.0, c_b3 = 500.0 / 1113.0, c_b4 = 125.0 / 192.0,
                 c_b5 = -2187.0 / 6784.0, c_b6 = 11.0 / 84.0;
// Fifth-order minus embedded fourth-order weights.
constexpr double c_e1 = 71.0 / 57600.0, c_e3 = -71.0 / 16695.0, c_e4 = 71.0 / 1920.0,
                 c_e5 = -17253.0 / 339200.0, c_e6 = 22.0 / 525.0, c_e7 = -1.0 / 40.0;

struct FlatRk45 {
    std::vector<double> x;
    bool accepted;
    double next_step;
    double error_norm;
};

FlatRk45 rk45_flat(const ClosedLoop& sys, std::span<const double> x, double h, double rel_tol,
                   double abs_tol, bool& clipped) {
    const std::size_t n = x.size();
    std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), y(n);
    sys.rhs(x, k1, clipped);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * c_a21 * k1[i];
    sys.rhs(tmp, k2, clipped);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * (c_a31 * k1[i] + c_a32 * k2[i]);
    sys.rhs(tmp, k3, clipped);
    for (std::size_t i = 0; i < n; ++i) {
        tmp[i] = x[i] + h * (c_a41 * k1[i] + c_a42 * k2[i] + c_a43 * k3[i]);
    }
    sys.rhs(tmp, k4, clipped);
    for (std::size_t i = 0; i < n; ++i) {
        tmp[i] = x[i] + h * (c_a51 * k1[i] + c_a52 * k2[i] + c_a53 * k3[i] + c_a54 * k4[i]);
    }
    sys.rhs(tmp, k5, clipped);
    for (std::size_t i = 0; i < n; ++i) {
        tmp[i] = x[i] + h * (c_a61 * k1[i] + c_a62 * k2[i] + c_a63 * k3[i] + c_a64 * k4[i] +
                             c_a65 * k5[i]);
    }
    sys.rhs(tmp, k6, clipped);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = x[i] + h * (c_b1 * k1[i] + c_b3 * k3[i] + c_b4 * k4[i] + c_b5 * k5[i] +
                           c_b6 * k6[i]);
    }
    sys.rhs(y, k7, clipped);

    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double err = h * (c_e1 * k1[i] + c_e3 * k3[i] + c_e4 * k4[i] + c_e5 * k5[i] +
                                c_e6 * k6[i] + c_e7 * k7[i]);
        const double scale = abs_tol + rel_tol * std::max(std::abs(x[i]), std::abs(y[i]));
        sum += (err / scale) * (err / scale);
    }
    const double norm = std::sqrt(sum / static_cast<double>(n));
    if (!std::isfinite(norm) || !finite(y)) {
        return {std::vector<double>(x.begin(), x.end()), false, 0.2 * h, norm};
    }
    const double factor =
        norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(norm, -0.2), 0.2, 5.0);
    const bool accepted = norm <= 1.0;
    return {accepted ? std::move(y) : std::vector<double>(x.begin(), x.end()), accepted,
            h * factor, norm};
}

void validate_tolerances(double rel_tol, double abs_tol) {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0) || !std::isfinite(rel_tol) ||
        !std::isfinite(abs_tol)) {
        throw InvalidParameter("rel_tol and abs_tol must be positive");
    }
}

class Recorder {
public:
    Recorder(const ClosedLoop& sys, const std::optional<ControllerSpec>& controller)
        : sys_(sys) {
        traj_.controller = controller;
    }

    void record(double t, std::span<const double> flat, bool clipped_since_last) {
        FeedbackEvaluation ev = sys_.observe(flat);
        traj_.times.push_back(t);
        traj_.states.push_back(sys_.unflatten(flat));
        traj_.outputs.push_back(std::move(ev.outputs));
        traj_.controls.push_back(std::move(ev.controls));
        traj_.lie_factors.push_back(std::move(ev.lie_factors));
        traj_.goal.push_back(ev.goal);
        traj_.goal_rate_bound.push_back(ev.goal_rate);
        traj_.clipped.push_back(clipped_since_last || ev.clipped);
    }

    Trajectory& trajectory() { return traj_; }

private:
    const ClosedLoop& sys_;
    Trajectory traj_;
};

[[noreturn]] void fail(Recorder& rec, const std::string& what, double t) {
    throw SimulationError(what + " at t=" + std::to_string(t), t, std::move(rec.trajectory()));
}

}  // namespace

bool Trajectory::any_clipped() const {
    return std::any_of(clipped.begin(), clipped.end(), [](bool b) { return b; });
}

void IntegratorSpec::validate() const {
    if (!(step > 0.0) || !std::isfinite(step)) throw InvalidParameter("step must be positive");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw InvalidParameter("horizon must be positive");
    }
    if (!(step < horizon)) throw InvalidParameter("step must be smaller than horizon");
    if (method == IntegrationMethod::RK45) validate_tolerances(rel_tol, abs_tol);
}

NetworkState step_rk4(const NetworkSystem& net, const NetworkState& states,
                      const std::optional<ControllerSpec>& controller, double h) {
    if (!(h > 0.0) || !std::isfinite(h)) throw InvalidParameter("step must be positive");
    return advance_rk4(net, states, controller, h);
}

NetworkState advance_rk4(const NetworkSystem& net, const NetworkState& states,
                         const std::optional<ControllerSpec>& controller, double h) {
    if (h == 0.0 || !std::isfinite(h)) throw InvalidParameter("step must be finite and non-zero");
    check_network_state(net, states);
    if (controller) controller->validate();
    ClosedLoop sys(net, controller);
    bool clipped = false;
    auto out = rk4_flat(sys, sys.flatten(states), h, clipped);
    if (!finite(out)) throw NumericDomainError("RK4 step produced non-finite state");
    return sys.unflatten(out);
}

Rk45Result step_rk45(const NetworkSystem& net, const NetworkState& states,
                     const std::optional<ControllerSpec>& controller, double h, double rel_tol,
                     double abs_tol) {
    if (!(h > 0.0) || !std::isfinite(h)) throw InvalidParameter("step must be positive");
    validate_tolerances(rel_tol, abs_tol);
    check_network_state(net, states);
    if (controller) controller->validate();
    ClosedLoop sys(net, controller);
    bool clipped = false;
    FlatRk45 r = rk45_flat(sys, sys.flatten(states), h, rel_tol, abs_tol, clipped);
    if (!r.accepted && r.next_step < kMinAdaptiveStep) {
        throw StiffnessError("RK45 step size underflow");
    }
    return {sys.unflatten(r.x), r.accepted, r.next_step, r.error_norm};
}

Trajectory simulate(const NetworkSystem& net, const NetworkState& initial,
                    const std::optional<ControllerSpec>& controller, const IntegratorSpec& integ,
                    std::size_t record_every) {
    integ.validate();
    if (record_every == 0) throw InvalidParameter("record_every must be positive");
    check_network_state(net, initial);
    if (controller) {
        controller->validate();
        if (controller->kind == ControllerKind::Alignment && net.size() < 2) {
            throw InvalidParameter("Alignment requires N >= 2 subsystems");
        }
        if (controller->kind == ControllerKind::Tracking && net.size() != 1) {
            throw InvalidParameter("Tracking governs exactly one subsystem");
        }
    }

    ClosedLoop sys(net, controller);
    Recorder rec(sys, controller);
    std::vector<double> x = sys.flatten(initial);
    const double horizon = integ.horizon;
    rec.record(0.0, x, false);

    bool clipped = false;
    std::size_t since_record = 0;

    if (integ.method == IntegrationMethod::RK4) {
        const double h = integ.step;
        const double ratio = horizon / h;
        std::size_t steps = static_cast<std::size_t>(std::llround(ratio));
        if (std::abs(static_cast<double>(steps) - ratio) > 1e-9 * ratio) {
            steps = static_cast<std::size_t>(std::ceil(ratio));
        }
        for (std::size_t k = 1; k <= steps; ++k) {
            const double t_prev = static_cast<double>(k - 1) * h;
            const double t = k == steps ? horizon : static_cast<double>(k) * h;
            x = rk4_flat(sys, x, t - t_prev, clipped);
            if (!finite(x)) fail(rec, "non-finite state", t);
            ++since_record;
            if (since_record == record_every || k == steps) {
                rec.record(t, x, clipped);
                clipped = false;
                since_record = 0;
            }
        }
        return std::move(rec.trajectory());
    }

    double t = 0.0;
    double h = integ.step;
    const double end_slack = 1e-12 * std::max(1.0, horizon);
    while (horizon - t > end_slack) {
        const bool last = t + h >= horizon - end_slack;
        const double h_try = last ? horizon - t : h;
        FlatRk45 r = rk45_flat(sys, x, h_try, integ.rel_tol, integ.abs_tol, clipped);
        if (!r.accepted) {
            if (r.next_step < kMinAdaptiveStep) {
                fail(rec, "RK45 step size underflow", t);
            }
            h = r.next_step;
            continue;
        }
        x = std::move(r.x);
        t = last ? horizon : t + h_try;
        h = r.next_step;
        ++since_record;
        if (since_record == record_every || t >= horizon) {
            rec.record(t, x, clipped);
            clipped = false;
            since_record = 0;
        }
    }
    if (rec.trajectory().times.back() != t) rec.record(t, x, clipped);
    return std::move(rec.trajectory());
}

}  // namespace sgc
