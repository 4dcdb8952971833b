#include "v2gsim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace v2gsim {

std::string_view to_string(EventKind kind) {
    switch (kind) {
    case EventKind::bus_fault_on:
        return "bus_fault_on";
    case EventKind::fault_clear:
        return "fault_clear";
    case EventKind::branch_trip:
        return "branch_trip";
    case EventKind::branch_restore:
        return "branch_restore";
    }
    return "fault_clear";
}

std::string_view to_string(Instability::Kind kind) {
    switch (kind) {
    case Instability::Kind::none:
        return "none";
    case Instability::Kind::network_divergence:
        return "network_divergence";
    case Instability::Kind::loss_of_synchronism:
        return "loss_of_synchronism";
    }
    return "none";
}

control::PevgConfig ControlSettings::pevg_config(const PowerSystemCase& sys) const {
    control::PevgConfig cfg;
    cfg.h_global = h_mw_per_hz;
    cfg.h = h_mw_per_hz > 0.0 ? control::allocate_gains(h_mw_per_hz, sys)
                              : std::vector<double>(sys.buses.size(), 0.0);
    cfg.activation_dfdt = activation_dfdt;
    cfg.sleep_df = sleep_df;
    cfg.sleep_dfdt = sleep_dfdt;
    cfg.trigger_enabled = trigger_enabled;
    return cfg;
}

void validate_scenario(const PowerSystemCase& sys, const Scenario& scenario) {
    auto fail = [](const std::string& msg) { throw std::invalid_argument("scenario: " + msg); };
    if (!(scenario.dt > 0.0) || !std::isfinite(scenario.dt)) {
        fail("dt must be positive");
    }
    if (!(scenario.t_end > 0.0) || !std::isfinite(scenario.t_end)) {
        fail("t_end must be positive");
    }
    if (!(scenario.sample_interval > 0.0)) {
        fail("sample interval must be positive");
    }
    const auto& c = scenario.control;
    if (c.h_mw_per_hz < 0.0) {
        fail("PEV gain must be >= 0");
    }
    if (!(c.activation_dfdt > 0.0) || !(c.sleep_df > 0.0) || !(c.sleep_dfdt > 0.0)) {
        fail("trigger thresholds must be positive");
    }
    if (c.washout_tw < 0.0) {
        fail("washout time constant must be >= 0");
    }
    double previous = -1.0;
    std::vector<char> tripped(sys.branches.size(), 0);
    bool fault_active = false;
    for (const auto& ev : scenario.events) {
        std::ostringstream where;
        where << "event at t=" << ev.time << " (" << to_string(ev.kind) << ")";
        if (!(ev.time > previous)) {
            fail(where.str() + ": event times must be strictly increasing");
        }
        if (ev.time < 0.0 || ev.time > scenario.t_end) {
            fail(where.str() + ": outside [0, t_end]");
        }
        previous = ev.time;
        switch (ev.kind) {
        case EventKind::bus_fault_on:
            if (ev.target < 0 || ev.target >= sys.bus_count()) {
                fail(where.str() + ": no such bus");
            }
            fault_active = true;
            break;
        case EventKind::fault_clear:
            if (!fault_active) {
                fail(where.str() + ": no fault to clear");
            }
            fault_active = false;
            break;
        case EventKind::branch_trip:
        case EventKind::branch_restore: {
            if (ev.target < 0 || ev.target >= static_cast<int>(sys.branches.size())) {
                fail(where.str() + ": no such branch");
            }
            auto& flag = tripped[static_cast<std::size_t>(ev.target)];
            if (ev.kind == EventKind::branch_trip && flag) {
                fail(where.str() + ": branch already out");
            }
            if (ev.kind == EventKind::branch_restore && !flag) {
                fail(where.str() + ": branch is not out");
            }
            flag = ev.kind == EventKind::branch_trip ? 1 : 0;
            break;
        }
        }
    }
}

double coi_angle_spread(std::span<const double> delta, std::span<const double> inertia) {
    double total = 0.0;
    double weighted = 0.0;
    for (std::size_t i = 0; i < delta.size(); ++i) {
        total += inertia[i];
        weighted += inertia[i] * delta[i];
    }
    double coi = weighted / total;
    double spread = 0.0;
    for (double d : delta) {
        spread = std::max(spread, std::abs(d - coi));
    }
    return spread;
}

Simulator::Simulator(std::shared_ptr<const DynamicModel> model, Scenario scenario)
    : model_(std::move(model)), scenario_(std::move(scenario)) {
    validate_scenario(model_->sys, scenario_);
    pevg_cfg_ = scenario_.control.pevg_config(model_->sys);
    for (std::size_t i = 0; i < pevg_cfg_.h.size(); ++i) {
        if (pevg_cfg_.h[i] > 0.0) {
            pev_buses_.push_back(static_cast<int>(i));
        }
    }
    rebuild_network();
    reset(initial_state());
}

SystemState Simulator::initial_state() const {
    const auto& m = *model_;
    SystemState s;
    s.t = 0.0;
    s.delta.resize(m.machine_count());
    for (int g = 0; g < m.machine_count(); ++g) {
        s.delta(g) = m.machines[static_cast<std::size_t>(g)].delta0;
    }
    s.omega = Eigen::VectorXd::Zero(m.machine_count());
    s.v.resize(m.bus_count());
    s.theta.resize(m.bus_count());
    for (int i = 0; i < m.bus_count(); ++i) {
        s.v(i) = std::polar(m.pf.v(i), m.pf.theta(i));
        s.theta(i) = m.pf.theta(i);
    }
    return s;
}

void Simulator::rebuild_network() {
    std::vector<TopologyMod> mods;
    for (int b : tripped_) {
        mods.push_back(TopologyMod::branch_out(b));
    }
    for (int bus : faulted_) {
        mods.push_back(TopologyMod::bus_fault(bus));
    }
    network_ = std::make_unique<NetworkSolver>(*model_, mods, scenario_.network);
    pev_sensitivity_.resize(0, 0);
}

void Simulator::reset(const SystemState& start) {
    const auto& m = *model_;
    state_.t = start.t;
    state_.delta = start.delta;
    state_.omega = start.omega;
    if (start.v.size() == m.bus_count()) {
        state_.v = start.v;
        state_.theta = start.theta;
    } else {
        state_.v = Eigen::VectorXcd::Ones(m.bus_count());
        state_.theta = Eigen::VectorXd::Zero(m.bus_count());
    }
    pevg_pu_.assign(static_cast<std::size_t>(m.bus_count()), 0.0);
    state_.pevg.assign(static_cast<std::size_t>(m.bus_count()), control::ControllerState{});
    solve_network_at_state();
    reset_measurements();
}

void Simulator::reset_measurements() {
    const auto& m = *model_;
    auto by_bus = m.sys.generators_by_bus();
    state_.meters.clear();
    state_.meters.reserve(static_cast<std::size_t>(m.bus_count()));
    for (int i = 0; i < m.bus_count(); ++i) {
        const auto& gens = by_bus[static_cast<std::size_t>(i)];
        int machine = gens.empty() ? -1 : gens.front();
        FrequencyMeter meter(machine, scenario_.control.washout_tw);
        meter.reset(state_.theta(i), machine >= 0 ? state_.omega(machine) : 0.0);
        state_.meters.push_back(meter);
    }
}

void Simulator::solve_network_at_state() {
    Eigen::VectorXd pe;
    v_work_ = state_.v;
    network_->solve({state_.delta.data(), static_cast<std::size_t>(state_.delta.size())},
                    pevg_pu_, v_work_, pe);
    for (Eigen::Index i = 0; i < v_work_.size(); ++i) {
        double raw = std::arg(v_work_(i));
        double prev = state_.theta(i);
        state_.theta(i) = prev + std::remainder(raw - prev, 2.0 * std::numbers::pi);
    }
    state_.v = v_work_;
}

void Simulator::refresh_measurements(double dt) {
    const auto& sys = model_->sys;
    for (std::size_t i = 0; i < state_.meters.size(); ++i) {
        auto& meter = state_.meters[i];
        int g = meter.machine();
        meter.update(state_.theta(static_cast<Eigen::Index>(i)), g >= 0 ? state_.omega(g) : 0.0, dt);
        double h = pevg_cfg_.h[i];
        if (h > 0.0) {
            state_.pevg[i] = control::update_controller(state_.pevg[i], meter.df(), meter.dfdt(), h,
                                                        sys.mva_base, pevg_cfg_);
        } else {
            state_.pevg[i].filtered_df = meter.df();
            state_.pevg[i].filtered_dfdt = meter.dfdt();
        }
        pevg_pu_[i] = state_.pevg[i].output_p;
    }
}

void Simulator::step(double dt) {
    const auto n = state_.delta.size();
    Eigen::VectorXd pe;
    auto derivative = [&](const Eigen::VectorXd& delta, const Eigen::VectorXd& omega,
                          Eigen::VectorXd& d_delta, Eigen::VectorXd& d_omega) {
        network_->solve({delta.data(), static_cast<std::size_t>(n)}, pevg_pu_, v_work_, pe);
        d_delta = omega;
        d_omega = swing_rhs(*model_, omega, pe);
    };

    const Eigen::VectorXd d0 = state_.delta;
    const Eigen::VectorXd w0 = state_.omega;
    Eigen::VectorXd k1d, k1w, k2d, k2w, k3d, k3w, k4d, k4w;
    v_work_ = state_.v;
    derivative(d0, w0, k1d, k1w);
    derivative(d0 + 0.5 * dt * k1d, w0 + 0.5 * dt * k1w, k2d, k2w);
    derivative(d0 + 0.5 * dt * k2d, w0 + 0.5 * dt * k2w, k3d, k3w);
    derivative(d0 + dt * k3d, w0 + dt * k3w, k4d, k4w);
    state_.delta = d0 + (dt / 6.0) * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
    state_.omega = w0 + (dt / 6.0) * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
    state_.t += dt;

    update_controls(dt);
}

void Simulator::update_controls(double dt) {
    if (pev_buses_.empty()) {
        solve_network_at_state();
        refresh_measurements(dt);
        return;
    }
    // Find p with p = controller(meter(theta(p))) by chord iterations on
    // J = I - C S, where S is the angle sensitivity of the network and C the
    // controller gain per radian of angle step at each metered load bus.
    const auto meters0 = state_.meters;
    const auto ctrl0 = state_.pevg;
    const Eigen::VectorXd theta0 = state_.theta;
    const auto m = static_cast<Eigen::Index>(pev_buses_.size());
    const double tw = scenario_.control.washout_tw;
    const double dtheta_gain = tw > 0.0 ? -std::expm1(-dt / tw) / dt : 1.0 / dt;  // rad/s per rad

    // Sleep/wake is decided once, from the measurement under the held powers;
    // letting it flip inside the iteration leaves the map without a fixed point.
    std::vector<control::Mode> modes;
    auto evaluate = [&](const Eigen::VectorXd& p) {
        state_.meters = meters0;
        state_.pevg = ctrl0;
        state_.theta = theta0;
        for (Eigen::Index k = 0; k < m; ++k) {
            pevg_pu_[static_cast<std::size_t>(pev_buses_[static_cast<std::size_t>(k)])] = p(k);
        }
        solve_network_at_state();
        refresh_measurements(dt);
        if (!modes.empty()) {
            for (Eigen::Index k = 0; k < m; ++k) {
                const auto bus = static_cast<std::size_t>(pev_buses_[static_cast<std::size_t>(k)]);
                auto& cs = state_.pevg[bus];
                cs.mode = modes[static_cast<std::size_t>(k)];
                cs.output_p = cs.mode == control::Mode::active
                                  ? control::saturated_droop(cs.filtered_df, pevg_cfg_.h[bus],
                                                             pevg_cfg_.f_sat) /
                                        model_->sys.mva_base
                                  : 0.0;
                pevg_pu_[bus] = cs.output_p;
            }
        }
        Eigen::VectorXd q(m);
        for (Eigen::Index k = 0; k < m; ++k) {
            q(k) = pevg_pu_[static_cast<std::size_t>(pev_buses_[static_cast<std::size_t>(k)])];
        }
        return q;
    };

    Eigen::VectorXd p(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        p(k) = pevg_pu_[static_cast<std::size_t>(pev_buses_[static_cast<std::size_t>(k)])];
    }
    constexpr int kMaxIterations = 30;
    constexpr double kTolerance = 1e-11;
    for (int it = 0; it < kMaxIterations; ++it) {
        Eigen::VectorXd r = p - evaluate(p);
        if (it == 0) {
            for (int bus : pev_buses_) {
                modes.push_back(state_.pevg[static_cast<std::size_t>(bus)].mode);
            }
        }
        if (r.cwiseAbs().maxCoeff() <= kTolerance) {
            return;
        }
        if (pev_sensitivity_.size() == 0 || it == 10) {
            pev_sensitivity_ = network_->angle_sensitivity(state_.v, pev_buses_);
        }
        Eigen::MatrixXd j = Eigen::MatrixXd::Identity(m, m);
        for (Eigen::Index k = 0; k < m; ++k) {
            const auto bus = static_cast<std::size_t>(pev_buses_[static_cast<std::size_t>(k)]);
            const auto& cs = state_.pevg[bus];
            if (state_.meters[bus].machine() >= 0 || cs.mode != control::Mode::active ||
                std::abs(cs.filtered_df) >= pevg_cfg_.f_sat) {
                continue;
            }
            const double c = pevg_cfg_.h[bus] / model_->sys.mva_base * dtheta_gain /
                             (2.0 * std::numbers::pi);
            for (Eigen::Index l = 0; l < m; ++l) {
                j(k, l) -= c * pev_sensitivity_(static_cast<Eigen::Index>(bus), l);
            }
        }
        p -= j.partialPivLu().solve(r);
    }
    // Left at the last evaluation; the residual is a fraction of the saturation band.
}

void Simulator::apply(const Event& event) {
    switch (event.kind) {
    case EventKind::bus_fault_on:
        if (std::find(faulted_.begin(), faulted_.end(), event.target) == faulted_.end()) {
            faulted_.push_back(event.target);
        }
        break;
    case EventKind::fault_clear:
        faulted_.clear();
        break;
    case EventKind::branch_trip:
        tripped_.push_back(event.target);
        break;
    case EventKind::branch_restore:
        std::erase(tripped_, event.target);
        break;
    }
    rebuild_network();
    solve_network_at_state();
}

std::vector<double> Simulator::pevg_powers() const { return pevg_pu_; }

Eigen::VectorXd Simulator::stage_derivative(const Eigen::VectorXd& delta,
                                            const Eigen::VectorXd& omega,
                                            std::span<const double> pevg_pu) const {
    const auto n = delta.size();
    Eigen::VectorXcd v = state_.v;
    Eigen::VectorXd pe;
    network_->solve({delta.data(), static_cast<std::size_t>(n)}, pevg_pu, v, pe);
    Eigen::VectorXd out(2 * n);
    out.head(n) = omega;
    out.tail(n) = swing_rhs(*model_, omega, pe);
    return out;
}

TraceSample Simulator::sample() const {
    TraceSample s;
    s.t = state_.t;
    s.delta.assign(state_.delta.data(), state_.delta.data() + state_.delta.size());
    s.omega.assign(state_.omega.data(), state_.omega.data() + state_.omega.size());
    s.v.resize(static_cast<std::size_t>(state_.v.size()));
    s.theta.assign(state_.theta.data(), state_.theta.data() + state_.theta.size());
    s.p_pevg.resize(pevg_pu_.size());
    s.df.resize(state_.meters.size());
    for (std::size_t i = 0; i < s.v.size(); ++i) {
        s.v[i] = std::abs(state_.v(static_cast<Eigen::Index>(i)));
        s.p_pevg[i] = pevg_pu_[i] * model_->sys.mva_base;
        s.df[i] = state_.meters[i].df();
    }
    return s;
}

Trace Simulator::run() {
    const auto& sys = model_->sys;
    Trace trace;
    trace.case_name = sys.name;
    trace.scenario = scenario_;
    for (const auto& bus : sys.buses) {
        trace.bus_ids.push_back(bus.external_id);
    }
    for (const auto& gen : sys.generators) {
        trace.machine_buses.push_back(sys.buses[static_cast<std::size_t>(gen.bus)].external_id);
        trace.inertia.push_back(gen.m);
    }
    trace.last_event_time = scenario_.events.empty() ? 0.0 : scenario_.events.back().time;

    const auto& events = scenario_.events;
    const double t_end = scenario_.t_end;
    const double interval = scenario_.sample_interval;
    const auto sample_count = static_cast<std::size_t>(std::floor(t_end / interval + 1e-9)) + 1;
    trace.samples.reserve(sample_count);
    auto sample_time = [&](std::size_t k) { return static_cast<double>(k) * interval; };
    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); };

    std::size_t next_event = 0;
    std::size_t next_sample = 0;
    while (next_sample < sample_count && sample_time(next_sample) < state_.t &&
           !close(sample_time(next_sample), state_.t)) {
        ++next_sample;
    }
    auto settle_time_point = [&]() {
        while (next_event < events.size() &&
               (events[next_event].time < state_.t || close(events[next_event].time, state_.t))) {
            apply(events[next_event]);
            ++next_event;
        }
        while (next_sample < sample_count &&
               (sample_time(next_sample) < state_.t || close(sample_time(next_sample), state_.t))) {
            trace.samples.push_back(sample());
            ++next_sample;
        }
    };

    std::vector<double> inertia = trace.inertia;
    try {
        settle_time_point();
        while (state_.t < t_end && !close(state_.t, t_end)) {
            double boundary = t_end;
            if (next_event < events.size()) {
                boundary = std::min(boundary, events[next_event].time);
            }
            if (next_sample < sample_count) {
                boundary = std::min(boundary, sample_time(next_sample));
            }
            const double span = boundary - state_.t;
            const auto steps = std::max<long>(1, static_cast<long>(std::ceil(span / scenario_.dt - 1e-9)));
            const double h = span / static_cast<double>(steps);
            for (long k = 0; k < steps; ++k) {
                step(h);
                if (next_event == events.size() && trace.instability.kind == Instability::Kind::none) {
                    double spread = coi_angle_spread(
                        {state_.delta.data(), static_cast<std::size_t>(state_.delta.size())}, inertia);
                    if (spread > std::numbers::pi) {
                        trace.instability = {Instability::Kind::loss_of_synchronism, state_.t,
                                             "rotor-angle spread exceeded pi"};
                        if (scenario_.stop_on_loss_of_sync) {
                            trace.samples.push_back(sample());
                            return trace;
                        }
                    }
                }
            }
            state_.t = boundary;
            settle_time_point();
        }
    } catch (const NetworkSolveError& e) {
        trace.instability = {Instability::Kind::network_divergence, state_.t, e.what()};
    }
    return trace;
}

Trace simulate(std::shared_ptr<const DynamicModel> model, const Scenario& scenario,
               const std::optional<SystemState>& start) {
    Simulator sim(std::move(model), scenario);
    if (start) {
        sim.reset(*start);
    }
    return sim.run();
}

}  // namespace v2gsim
