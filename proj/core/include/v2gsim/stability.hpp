#pragma once

#include <complex>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "v2gsim/dynamic_model.hpp"
#include "v2gsim/simulator.hpp"

namespace v2gsim {

// ---------------------------------------------------------------------------
// Small-signal analysis

/// Linearised machine dynamics, states ordered [delta_1..delta_n, omega_1..omega_n].
struct StateMatrix {
    Eigen::MatrixXd a;
    int machines = 0;
};

struct LinearizeOptions {
    double perturbation = 1e-6;  // scaled by max(1, |x_j|)
    int max_retries = 3;         // halvings of the perturbation on a failed network solve
};

/// Bus frequency (rad/s) as a linear combination of machine speeds, one row
/// per bus. Generator terminals map to their own machine; the others use the
/// sensitivity of the bus angle to the rotor angles at the operating point.
/// This is what the washout measurement settles to for slow motions, and it
/// is how the droop enters the linear model.
[[nodiscard]] Eigen::MatrixXd bus_frequency_map(const DynamicModel& model,
                                                const LinearizeOptions& options = {});

/// Central finite differences of the reduced dynamics (network eliminated by
/// a solve at every perturbed point) about the initial equilibrium. The PEV
/// droop is taken in its unsaturated, always-active form.
[[nodiscard]] StateMatrix linearize(const DynamicModel& model, double h_mw_per_hz,
                                    const LinearizeOptions& options = {});

/// Default magnitude below which an eigenvalue counts as the angle-reference mode.
inline constexpr double kZeroModeThreshold = 1e-9;

struct AlphaResult {
    double alpha = 0.0;
    std::vector<std::complex<double>> eigenvalues;  // full spectrum
    int excluded = 0;                               // eigenvalues dropped as zero modes
};

/// Largest real part over the spectrum, ignoring eigenvalues with |lambda| below the threshold.
[[nodiscard]] AlphaResult alpha(const StateMatrix& sm, double zero_threshold = kZeroModeThreshold);

struct AlphaSweep {
    std::vector<double> h_mw_per_hz;
    std::vector<double> alpha;  // NaN where the point failed
    std::vector<std::string> errors;
    int argmin = -1;
};

[[nodiscard]] AlphaSweep sweep_alpha(const DynamicModel& model, const std::vector<double>& h_grid,
                                     int workers = 1, const LinearizeOptions& options = {});

// ---------------------------------------------------------------------------
// Transient stability

enum class Verdict { stable, unstable };

[[nodiscard]] std::string_view to_string(Verdict v);

struct ClassifyOptions {
    double min_post_event = 10.0;              // s of trace required after the last event
    double angle_limit = std::numbers::pi;     // rad, COI frame
    double final_window = 2.0;                 // s
    double final_df_limit = 0.5;               // Hz
};

class TraceTooShort : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Unstable if the network solve diverged, or after the last event the rotor
/// angles spread more than the limit from the centre of inertia, or any bus or
/// machine frequency deviation in the final window reaches the limit.
[[nodiscard]] Verdict classify(const Trace& trace, const ClassifyOptions& options = {});

struct CctOptions {
    double fault_time = 1.0;     // s of pre-fault hold
    double bracket_max = 1.0;    // s
    double resolution = 1e-3;    // s, final bracket width
    double post_clear = 10.0;    // s simulated after clearing
    double dt = 1e-3;
    double sample_interval = 0.01;
    ControlSettings control;     // h_mw_per_hz is overridden by the call
    ClassifyOptions classify;
};

struct CctResult {
    enum class Status { found, stable_at_max, unclearable, failed };
    Status status = Status::failed;
    double cct = std::numeric_limits<double>::quiet_NaN();  // s
    int simulations = 0;
    std::string message;
};

[[nodiscard]] std::string_view to_string(CctResult::Status s);

/// Scenario for a bolted fault at `bus` (internal index) cleared after `duration`.
[[nodiscard]] Scenario fault_scenario(int bus, double duration, double h_mw_per_hz,
                                      const CctOptions& options);

/// Simulates and classifies one fault duration.
[[nodiscard]] Verdict fault_verdict(std::shared_ptr<const DynamicModel> model, int bus,
                                    double duration, double h_mw_per_hz, const CctOptions& options);

/// Bisection on the clearing duration. Returns the stable end of the final bracket.
[[nodiscard]] CctResult critical_clearing_time(std::shared_ptr<const DynamicModel> model, int bus,
                                               double h_mw_per_hz, const CctOptions& options = {});

struct CctTable {
    std::vector<int> buses;        // external bus numbers
    std::vector<double> h_values;  // as given by the caller (labels)
    std::vector<double> h_mw_per_hz;
    std::vector<CctResult> cells;  // row-major: buses x h

    [[nodiscard]] const CctResult& at(std::size_t bus_row, std::size_t h_col) const {
        return cells[bus_row * h_values.size() + h_col];
    }
};

/// Independent (bus, h) bisections spread over workers. Per-cell failures are
/// recorded in the cell and do not stop the sweep.
[[nodiscard]] CctTable cct_table(std::shared_ptr<const DynamicModel> model,
                                 const std::vector<int>& external_buses,
                                 const std::vector<double>& h_labels,
                                 const std::vector<double>& h_mw_per_hz, const CctOptions& options,
                                 int workers = 1);

// ---------------------------------------------------------------------------
// Region of asymptotic stability

struct RasGrid {
    int nx = 41;
    int ny = 41;
    double range_x = std::numbers::pi;  // half-width, rad
    double range_y = std::numbers::pi;
    int reference_machine = 0;
    int machine_x = 1;
    int machine_y = 2;
    double horizon = 10.0;  // s
    double dt = 1e-3;
    long max_simulations = -1;  // < 0: unlimited
};

struct RasMap {
    RasGrid grid;
    double h_mw_per_hz = 0.0;
    std::vector<double> xs;
    std::vector<double> ys;
    std::vector<std::int8_t> cells;  // row-major [iy][ix]: 1 stable, 0 unstable, -1 not evaluated
    bool complete = false;

    [[nodiscard]] std::int8_t at(int ix, int iy) const {
        return cells[static_cast<std::size_t>(iy) * xs.size() + static_cast<std::size_t>(ix)];
    }
    [[nodiscard]] int stable_count() const;
    [[nodiscard]] int evaluated_count() const;
};

/// Initial state for one RAS grid point: equilibrium with machines x and y
/// displaced by the given angles, all speeds zero.
[[nodiscard]] SystemState ras_initial_state(const Simulator& sim, const RasGrid& grid, double dx,
                                            double dy);

[[nodiscard]] RasMap ras_scan(std::shared_ptr<const DynamicModel> model, double h_mw_per_hz,
                              const RasGrid& grid, const ControlSettings& control = {},
                              int workers = 1);

/// True when every point stable in `inner` is also stable in `outer`
/// (same grid, evaluated points only).
[[nodiscard]] bool ras_contained(const RasMap& inner, const RasMap& outer);

}  // namespace v2gsim
