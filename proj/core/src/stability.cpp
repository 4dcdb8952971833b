#include "v2gsim/stability.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include <Eigen/Eigenvalues>

#include "v2gsim/network.hpp"
#include "v2gsim/parallel.hpp"

namespace v2gsim {

namespace {

std::vector<double> equilibrium_angles(const DynamicModel& model) {
    std::vector<double> delta(model.machines.size());
    for (std::size_t g = 0; g < delta.size(); ++g) {
        delta[g] = model.machines[g].delta0;
    }
    return delta;
}

Eigen::VectorXcd power_flow_voltages(const DynamicModel& model) {
    Eigen::VectorXcd v(model.bus_count());
    for (int i = 0; i < model.bus_count(); ++i) {
        v(i) = std::polar(model.pf.v(i), model.pf.theta(i));
    }
    return v;
}

/// F(delta, omega) with the network eliminated and the droop in linear form.
class ReducedDynamics {
public:
    ReducedDynamics(const DynamicModel& model, double h_mw_per_hz, Eigen::MatrixXd freq_map)
        : model_(model), solver_(model), freq_map_(std::move(freq_map)),
          guess_(power_flow_voltages(model)) {
        gain_.assign(static_cast<std::size_t>(model.bus_count()), 0.0);
        if (h_mw_per_hz > 0.0) {
            auto h = control::allocate_gains(h_mw_per_hz, model.sys);
            for (std::size_t i = 0; i < h.size(); ++i) {
                gain_[i] = h[i] / model.sys.mva_base / (2.0 * std::numbers::pi);  // pu per rad/s
            }
        }
    }

    Eigen::VectorXd operator()(const Eigen::VectorXd& x) const {
        const auto n = static_cast<Eigen::Index>(model_.machines.size());
        Eigen::VectorXd delta = x.head(n);
        Eigen::VectorXd omega = x.tail(n);
        Eigen::VectorXd bus_speed = freq_map_ * omega;
        std::vector<double> pevg(gain_.size());
        for (std::size_t i = 0; i < pevg.size(); ++i) {
            pevg[i] = gain_[i] * bus_speed(static_cast<Eigen::Index>(i));
        }
        Eigen::VectorXcd v = guess_;
        Eigen::VectorXd pe;
        solver_.solve({delta.data(), static_cast<std::size_t>(n)}, pevg, v, pe);
        Eigen::VectorXd out(2 * n);
        out.head(n) = omega;
        out.tail(n) = swing_rhs(model_, omega, pe);
        return out;
    }

private:
    const DynamicModel& model_;
    NetworkSolver solver_;
    Eigen::MatrixXd freq_map_;
    Eigen::VectorXcd guess_;
    std::vector<double> gain_;
};

template <class F>
Eigen::VectorXd central_column(const F& f, const Eigen::VectorXd& x, Eigen::Index j,
                               const LinearizeOptions& options) {
    double eps = options.perturbation * std::max(1.0, std::abs(x(j)));
    for (int attempt = 0;; ++attempt) {
        try {
            Eigen::VectorXd plus = x;
            Eigen::VectorXd minus = x;
            plus(j) += eps;
            minus(j) -= eps;
            return (f(plus) - f(minus)) / (2.0 * eps);
        } catch (const NetworkSolveError&) {
            if (attempt >= options.max_retries) {
                throw;
            }
            eps *= 0.5;
        }
    }
}

}  // namespace

Eigen::MatrixXd bus_frequency_map(const DynamicModel& model, const LinearizeOptions& options) {
    const int n_bus = model.bus_count();
    const int n_gen = model.machine_count();
    Eigen::MatrixXd map = Eigen::MatrixXd::Zero(n_bus, n_gen);
    auto by_bus = model.sys.generators_by_bus();
    NetworkSolver solver(model);
    const Eigen::VectorXcd v0 = power_flow_voltages(model);
    const std::vector<double> no_pevg(static_cast<std::size_t>(n_bus), 0.0);
    auto angles = [&](const Eigen::VectorXd& delta) {
        Eigen::VectorXcd v = v0;
        Eigen::VectorXd pe;
        solver.solve({delta.data(), static_cast<std::size_t>(delta.size())}, no_pevg, v, pe);
        Eigen::VectorXd th(n_bus);
        for (int i = 0; i < n_bus; ++i) {
            // Unwrapped relative to the operating point.
            th(i) = model.pf.theta(i) + std::remainder(std::arg(v(i)) - model.pf.theta(i),
                                                       2.0 * std::numbers::pi);
        }
        return th;
    };
    auto d0 = equilibrium_angles(model);
    Eigen::VectorXd delta0 = Eigen::Map<const Eigen::VectorXd>(d0.data(), n_gen);
    for (int k = 0; k < n_gen; ++k) {
        Eigen::VectorXd column = central_column(angles, delta0, k, options);
        for (int i = 0; i < n_bus; ++i) {
            if (by_bus[static_cast<std::size_t>(i)].empty()) {
                map(i, k) = column(i);
            }
        }
    }
    for (int i = 0; i < n_bus; ++i) {
        if (!by_bus[static_cast<std::size_t>(i)].empty()) {
            map(i, by_bus[static_cast<std::size_t>(i)].front()) = 1.0;
        }
    }
    return map;
}

StateMatrix linearize(const DynamicModel& model, double h_mw_per_hz, const LinearizeOptions& options) {
    const int n = model.machine_count();
    ReducedDynamics f(model, h_mw_per_hz,
                      h_mw_per_hz > 0.0 ? bus_frequency_map(model, options)
                                        : Eigen::MatrixXd::Zero(model.bus_count(), n));
    auto d0 = equilibrium_angles(model);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(2 * n);
    for (int g = 0; g < n; ++g) {
        x(g) = d0[static_cast<std::size_t>(g)];
    }
    StateMatrix sm;
    sm.machines = n;
    sm.a.resize(2 * n, 2 * n);
    for (int j = 0; j < 2 * n; ++j) {
        sm.a.col(j) = central_column(f, x, j, options);
    }
    // d(delta)/dt = omega holds exactly.
    sm.a.topLeftCorner(n, n).setZero();
    sm.a.topRightCorner(n, n).setIdentity();
    // The electrical powers depend on angle differences only, so every row of
    // the angle block sums to zero. Imposing that keeps finite-difference noise
    // from shifting the structural zero eigenvalue.
    for (int i = 0; i < n; ++i) {
        double off = 0.0;
        for (int k = 0; k < n; ++k) {
            if (k != i) {
                off += sm.a(n + i, k);
            }
        }
        sm.a(n + i, i) = -off;
    }
    return sm;
}

AlphaResult alpha(const StateMatrix& sm, double zero_threshold) {
    if (!sm.a.allFinite()) {
        throw std::invalid_argument("state matrix has non-finite entries");
    }
    Eigen::EigenSolver<Eigen::MatrixXd> solver(sm.a, false);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("eigenvalue computation did not converge");
    }
    AlphaResult out;
    out.alpha = -std::numeric_limits<double>::infinity();
    const auto& ev = solver.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        out.eigenvalues.push_back(ev(i));
        if (std::abs(ev(i)) < zero_threshold) {
            ++out.excluded;
            continue;
        }
        out.alpha = std::max(out.alpha, ev(i).real());
    }
    std::sort(out.eigenvalues.begin(), out.eigenvalues.end(),
              [](const auto& a, const auto& b) {
                  return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag();
              });
    return out;
}

AlphaSweep sweep_alpha(const DynamicModel& model, const std::vector<double>& h_grid, int workers,
                       const LinearizeOptions& options) {
    AlphaSweep out;
    out.h_mw_per_hz = h_grid;
    out.alpha.assign(h_grid.size(), std::numeric_limits<double>::quiet_NaN());
    out.errors.assign(h_grid.size(), std::string{});
    parallel_for(h_grid.size(), workers, [&](std::size_t i) {
        try {
            out.alpha[i] = alpha(linearize(model, h_grid[i], options)).alpha;
        } catch (const std::exception& e) {
            out.errors[i] = e.what();
        }
    });
    for (std::size_t i = 0; i < out.alpha.size(); ++i) {
        if (std::isnan(out.alpha[i])) {
            continue;
        }
        if (out.argmin < 0 || out.alpha[i] < out.alpha[static_cast<std::size_t>(out.argmin)]) {
            out.argmin = static_cast<int>(i);
        }
    }
    return out;
}

std::string_view to_string(Verdict v) { return v == Verdict::stable ? "stable" : "unstable"; }

std::string_view to_string(CctResult::Status s) {
    switch (s) {
    case CctResult::Status::found:
        return "found";
    case CctResult::Status::stable_at_max:
        return "stable_at_max";
    case CctResult::Status::unclearable:
        return "unclearable";
    case CctResult::Status::failed:
        return "failed";
    }
    return "failed";
}

Verdict classify(const Trace& trace, const ClassifyOptions& options) {
    if (trace.instability.kind != Instability::Kind::none) {
        return Verdict::unstable;
    }
    if (trace.samples.empty()) {
        throw TraceTooShort("trace has no samples");
    }
    // The sample grid may stop short of t_end by less than one interval.
    const double t_last = std::max(trace.samples.back().t, trace.scenario.t_end);
    if (t_last - trace.last_event_time < options.min_post_event - 1e-9) {
        throw TraceTooShort("trace covers " + std::to_string(t_last - trace.last_event_time) +
                            " s after the last event; " + std::to_string(options.min_post_event) +
                            " s required");
    }
    for (const auto& s : trace.samples) {
        if (s.t < trace.last_event_time) {
            continue;
        }
        if (coi_angle_spread(s.delta, trace.inertia) > options.angle_limit) {
            return Verdict::unstable;
        }
    }
    const double window_start = t_last - options.final_window;
    for (const auto& s : trace.samples) {
        if (s.t < window_start - 1e-9) {
            continue;
        }
        for (double w : s.omega) {
            if (std::abs(w) / (2.0 * std::numbers::pi) >= options.final_df_limit) {
                return Verdict::unstable;
            }
        }
        for (double df : s.df) {
            if (std::abs(df) >= options.final_df_limit) {
                return Verdict::unstable;
            }
        }
    }
    return Verdict::stable;
}

Scenario fault_scenario(int bus, double duration, double h_mw_per_hz, const CctOptions& options) {
    Scenario sc;
    sc.dt = options.dt;
    sc.sample_interval = options.sample_interval;
    sc.control = options.control;
    sc.control.h_mw_per_hz = h_mw_per_hz;
    sc.stop_on_loss_of_sync = true;
    if (duration > 0.0) {
        sc.events.push_back({options.fault_time, EventKind::bus_fault_on, bus});
        sc.events.push_back({options.fault_time + duration, EventKind::fault_clear, -1});
        sc.t_end = options.fault_time + duration + options.post_clear;
    } else {
        sc.t_end = options.fault_time + options.post_clear;
    }
    return sc;
}

Verdict fault_verdict(std::shared_ptr<const DynamicModel> model, int bus, double duration,
                      double h_mw_per_hz, const CctOptions& options) {
    ClassifyOptions co = options.classify;
    co.min_post_event = std::min(co.min_post_event, options.post_clear);
    return classify(simulate(std::move(model), fault_scenario(bus, duration, h_mw_per_hz, options)), co);
}

CctResult critical_clearing_time(std::shared_ptr<const DynamicModel> model, int bus,
                                 double h_mw_per_hz, const CctOptions& options) {
    if (bus < 0 || bus >= model->bus_count()) {
        throw std::invalid_argument("fault bus index out of range");
    }
    CctResult out;
    auto verdict = [&](double duration) {
        ++out.simulations;
        return fault_verdict(model, bus, duration, h_mw_per_hz, options);
    };
    double lo = 0.0;
    double hi = options.bracket_max;
    if (verdict(lo) == Verdict::unstable) {
        out.status = CctResult::Status::unclearable;
        out.cct = 0.0;
        return out;
    }
    if (verdict(hi) == Verdict::stable) {
        out.status = CctResult::Status::stable_at_max;
        out.cct = hi;
        return out;
    }
    while (hi - lo > options.resolution) {
        double mid = 0.5 * (lo + hi);
        if (verdict(mid) == Verdict::stable) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    out.status = CctResult::Status::found;
    out.cct = lo;
    return out;
}

CctTable cct_table(std::shared_ptr<const DynamicModel> model, const std::vector<int>& external_buses,
                   const std::vector<double>& h_labels, const std::vector<double>& h_mw_per_hz,
                   const CctOptions& options, int workers) {
    if (h_labels.size() != h_mw_per_hz.size()) {
        throw std::invalid_argument("h labels and gains differ in length");
    }
    CctTable table;
    table.buses = external_buses;
    table.h_values = h_labels;
    table.h_mw_per_hz = h_mw_per_hz;
    std::vector<int> internal;
    for (int ext : external_buses) {
        auto idx = model->sys.bus_index(ext);
        if (!idx) {
            throw std::invalid_argument("unknown bus " + std::to_string(ext));
        }
        internal.push_back(*idx);
    }
    const std::size_t cols = h_labels.size();
    table.cells.resize(internal.size() * cols);
    parallel_for(table.cells.size(), workers, [&](std::size_t k) {
        auto& cell = table.cells[k];
        try {
            cell = critical_clearing_time(model, internal[k / cols], h_mw_per_hz[k % cols], options);
        } catch (const std::exception& e) {
            cell.status = CctResult::Status::failed;
            cell.message = e.what();
        }
    });
    return table;
}

int RasMap::stable_count() const {
    return static_cast<int>(std::count(cells.begin(), cells.end(), std::int8_t{1}));
}

int RasMap::evaluated_count() const {
    return static_cast<int>(std::count_if(cells.begin(), cells.end(), [](auto c) { return c >= 0; }));
}

SystemState ras_initial_state(const Simulator& sim, const RasGrid& grid, double dx, double dy) {
    SystemState s = sim.initial_state();
    s.delta(grid.machine_x) += dx;
    s.delta(grid.machine_y) += dy;
    s.omega.setZero();
    return s;
}

namespace {

std::vector<double> axis(int count, double half_width) {
    std::vector<double> out(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        out[static_cast<std::size_t>(i)] =
            count == 1 ? 0.0 : -half_width + 2.0 * half_width * i / (count - 1);
    }
    return out;
}

}  // namespace

RasMap ras_scan(std::shared_ptr<const DynamicModel> model, double h_mw_per_hz, const RasGrid& grid,
                const ControlSettings& control, int workers) {
    const int n = model->machine_count();
    for (int m : {grid.reference_machine, grid.machine_x, grid.machine_y}) {
        if (m < 0 || m >= n) {
            throw std::invalid_argument("RAS slice references machine " + std::to_string(m) +
                                        " but the case has " + std::to_string(n));
        }
    }
    if (grid.machine_x == grid.machine_y || grid.machine_x == grid.reference_machine ||
        grid.machine_y == grid.reference_machine) {
        throw std::invalid_argument("RAS slice machines must be distinct");
    }
    if (grid.nx < 1 || grid.ny < 1) {
        throw std::invalid_argument("RAS grid must have at least one point per axis");
    }
    RasMap map;
    map.grid = grid;
    map.h_mw_per_hz = h_mw_per_hz;
    map.xs = axis(grid.nx, grid.range_x);
    map.ys = axis(grid.ny, grid.range_y);
    const std::size_t total = map.xs.size() * map.ys.size();
    map.cells.assign(total, std::int8_t{-1});
    const std::size_t budget = grid.max_simulations < 0
                                   ? total
                                   : std::min(total, static_cast<std::size_t>(grid.max_simulations));

    Scenario sc;
    sc.t_end = grid.horizon;
    sc.dt = grid.dt;
    sc.sample_interval = 0.01;
    sc.control = control;
    sc.control.h_mw_per_hz = h_mw_per_hz;
    sc.stop_on_loss_of_sync = true;
    ClassifyOptions co;
    co.min_post_event = grid.horizon;

    parallel_for(budget, workers, [&](std::size_t k) {
        std::size_t ix = k % map.xs.size();
        std::size_t iy = k / map.xs.size();
        Simulator sim(model, sc);
        sim.reset(ras_initial_state(sim, grid, map.xs[ix], map.ys[iy]));
        map.cells[k] = classify(sim.run(), co) == Verdict::stable ? 1 : 0;
    });
    map.complete = budget == total;
    return map;
}

bool ras_contained(const RasMap& inner, const RasMap& outer) {
    if (inner.cells.size() != outer.cells.size()) {
        throw std::invalid_argument("RAS maps are on different grids");
    }
    for (std::size_t k = 0; k < inner.cells.size(); ++k) {
        if (inner.cells[k] == 1 && outer.cells[k] == 0) {
            return false;
        }
    }
    return true;
}

}  // namespace v2gsim
