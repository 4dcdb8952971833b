#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "v2gsim/control.hpp"
#include "v2gsim/dynamic_model.hpp"
#include "v2gsim/frequency.hpp"
#include "v2gsim/network.hpp"

namespace v2gsim {

enum class EventKind { bus_fault_on, fault_clear, branch_trip, branch_restore };

[[nodiscard]] std::string_view to_string(EventKind kind);

struct Event {
    double time = 0.0;
    EventKind kind = EventKind::fault_clear;
    int target = -1;  // internal bus index (fault) or branch index (trip/restore)
};

/// PEV-group control settings for a run.
struct ControlSettings {
    double h_mw_per_hz = 0.0;
    double activation_dfdt = 0.1;
    double sleep_df = 0.01;
    double sleep_dfdt = 0.1;
    double washout_tw = 0.1;
    bool trigger_enabled = true;

    [[nodiscard]] control::PevgConfig pevg_config(const PowerSystemCase& sys) const;
};

struct Scenario {
    std::vector<Event> events;
    double t_end = 10.0;
    double dt = 1e-3;
    double sample_interval = 0.01;
    ControlSettings control;
    NetworkOptions network;
    /// Stop as soon as the post-event rotor-angle spread in the centre-of-inertia
    /// frame exceeds pi. Used by batch analyses where the verdict is all that matters.
    bool stop_on_loss_of_sync = false;
};

/// Throws std::invalid_argument on any inconsistency.
void validate_scenario(const PowerSystemCase& sys, const Scenario& scenario);

struct SystemState {
    double t = 0.0;
    Eigen::VectorXd delta;  // rad, per machine
    Eigen::VectorXd omega;  // rad/s, per machine
    Eigen::VectorXcd v;     // bus voltage phasors
    Eigen::VectorXd theta;  // unwrapped bus angles, rad
    std::vector<control::ControllerState> pevg;  // per bus
    std::vector<FrequencyMeter> meters;          // per bus
};

struct Instability {
    enum class Kind { none, network_divergence, loss_of_synchronism };
    Kind kind = Kind::none;
    double time = 0.0;
    std::string detail;
};

[[nodiscard]] std::string_view to_string(Instability::Kind kind);

struct TraceSample {
    double t = 0.0;
    std::vector<double> delta;   // per machine, rad
    std::vector<double> omega;   // per machine, rad/s
    std::vector<double> v;       // per bus, pu
    std::vector<double> theta;   // per bus, rad
    std::vector<double> p_pevg;  // per bus, MW (positive = consumption)
    std::vector<double> df;      // per bus, Hz
};

struct Trace {
    std::string case_name;
    Scenario scenario;
    std::vector<int> bus_ids;         // external bus numbers
    std::vector<int> machine_buses;   // external terminal bus per machine
    std::vector<double> inertia;      // M per machine
    std::vector<TraceSample> samples;
    Instability instability;
    double last_event_time = 0.0;

    [[nodiscard]] bool diverged() const { return instability.kind != Instability::Kind::none; }
};

/// Maximum |delta_i - delta_COI| over machines.
[[nodiscard]] double coi_angle_spread(std::span<const double> delta, std::span<const double> inertia);

/// Fixed-step RK4 on the machine states with a network solve at every stage
/// evaluation. PEV-group powers are held over a step and refreshed once per
/// step from the bus frequency measurements. The refresh is solved jointly
/// with the network: a bus angle reacts instantly to the local PEV power, so
/// an explicit update would close a one-step-delay loop through the washout
/// that rings at large gains.
class Simulator {
public:
    Simulator(std::shared_ptr<const DynamicModel> model, Scenario scenario);

    /// Equilibrium start: rotor angles from initialisation, zero speeds.
    [[nodiscard]] SystemState initial_state() const;

    /// Resets to `start` (delta, omega, t are used; the rest is recomputed).
    void reset(const SystemState& start);

    /// Advances the current state by `dt`. Throws NetworkSolveError.
    void step(double dt);

    /// Applies one scenario event at the current time.
    void apply(const Event& event);

    /// Runs the whole scenario from the current state.
    [[nodiscard]] Trace run();

    /// One stage evaluation with explicit PEV powers (pu per bus): returns
    /// [d(delta)/dt; d(omega)/dt]. Uses the current topology.
    [[nodiscard]] Eigen::VectorXd stage_derivative(const Eigen::VectorXd& delta,
                                                   const Eigen::VectorXd& omega,
                                                   std::span<const double> pevg_pu) const;

    [[nodiscard]] const SystemState& state() const { return state_; }
    [[nodiscard]] const DynamicModel& model() const { return *model_; }
    [[nodiscard]] const Scenario& scenario() const { return scenario_; }
    [[nodiscard]] std::vector<double> pevg_powers() const;

private:
    void rebuild_network();
    void solve_network_at_state();
    void refresh_measurements(double dt);
    void update_controls(double dt);
    void reset_measurements();
    [[nodiscard]] TraceSample sample() const;

    std::shared_ptr<const DynamicModel> model_;
    Scenario scenario_;
    control::PevgConfig pevg_cfg_;
    std::vector<int> faulted_;
    std::vector<int> tripped_;
    std::unique_ptr<NetworkSolver> network_;
    SystemState state_;
    std::vector<double> pevg_pu_;
    std::vector<int> pev_buses_;        // buses with a nonzero gain
    Eigen::MatrixXd pev_sensitivity_;   // d(theta)/d(P) at those buses; empty = stale
    Eigen::VectorXcd v_work_;
};

/// Convenience: build a simulator, run from equilibrium (or from `start`).
[[nodiscard]] Trace simulate(std::shared_ptr<const DynamicModel> model, const Scenario& scenario,
                             const std::optional<SystemState>& start = std::nullopt);

}  // namespace v2gsim
