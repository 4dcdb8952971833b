#pragma once

#include <vector>

#include "v2gsim/case.hpp"

namespace v2gsim::control {

/// Frequency deviation at which the droop saturates, Hz.
inline constexpr double kSaturationHz = 0.1;
/// Per-vehicle droop gain, kW/Hz. Gives the +/-5 kW charger limit at +/-100 mHz.
inline constexpr double kVehicleGainKwPerHz = 50.0;

/// gain * df clamped to +/- gain * f_sat. The lower corner belongs to the
/// saturated branch, the upper one to the linear branch.
[[nodiscard]] double saturated_droop(double df, double gain, double f_sat);

/// Single-vehicle droop. Positive output means the vehicle charges (load),
/// negative means it discharges into the grid.
[[nodiscard]] double pev_power_kw(double df_hz, double gain_kw_per_hz = kVehicleGainKwPerHz);

/// Aggregated PEV group at one bus, MW. Saturates at +/-0.1*h_i MW.
[[nodiscard]] double pevg_power_mw(double df_hz, double gain_mw_per_hz);

/// Splits the system gain across buses in proportion to their active load.
/// Buses without load get zero. Throws if the case has no load at all.
[[nodiscard]] std::vector<double> allocate_gains(double h_global_mw_per_hz,
                                                 const PowerSystemCase& sys);

enum class Mode { asleep, active };

struct ControllerState {
    Mode mode = Mode::asleep;
    double filtered_df = 0.0;    // Hz
    double filtered_dfdt = 0.0;  // Hz/s
    double output_p = 0.0;       // pu on system base, positive = consumption
};

struct PevgConfig {
    double h_global = 0.0;        // MW/Hz
    std::vector<double> h;        // MW/Hz per bus
    double activation_dfdt = 0.1; // Hz/s
    double sleep_df = 0.01;       // Hz
    double sleep_dfdt = 0.1;      // Hz/s
    double f_sat = kSaturationHz; // Hz
    bool trigger_enabled = true;  // false: always active
};

/// Trigger/sleep transition. Wakes on |dfdt| >= activation_dfdt, sleeps when
/// both |df| < sleep_df and |dfdt| < sleep_dfdt. The output is zeroed while
/// asleep; otherwise it is left untouched.
[[nodiscard]] ControllerState update_trigger(ControllerState cs, double df, double dfdt,
                                             const PevgConfig& cfg);

/// One controller update at a bus: store the measurements, run the trigger
/// logic (unless disabled) and recompute the output.
[[nodiscard]] ControllerState update_controller(ControllerState cs, double df, double dfdt,
                                                double h_bus_mw_per_hz, double mva_base,
                                                const PevgConfig& cfg);

}  // namespace v2gsim::control
