#include "v2gsim/control.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace v2gsim::control {

double saturated_droop(double df, double gain, double f_sat) {
    if (df <= -f_sat) {
        return -f_sat * gain;
    }
    if (df > f_sat) {
        return f_sat * gain;
    }
    return gain * df;
}

double pev_power_kw(double df_hz, double gain_kw_per_hz) {
    return saturated_droop(df_hz, gain_kw_per_hz, kSaturationHz);
}

double pevg_power_mw(double df_hz, double gain_mw_per_hz) {
    return saturated_droop(df_hz, gain_mw_per_hz, kSaturationHz);
}

std::vector<double> allocate_gains(double h_global_mw_per_hz, const PowerSystemCase& sys) {
    double total = 0.0;
    for (const auto& bus : sys.buses) {
        total += std::max(bus.load_p, 0.0);
    }
    if (!(total > 0.0)) {
        throw std::invalid_argument("cannot allocate PEV gains: the case has no active load");
    }
    std::vector<double> h(sys.buses.size(), 0.0);
    for (const auto& bus : sys.buses) {
        h[static_cast<std::size_t>(bus.id)] = h_global_mw_per_hz * std::max(bus.load_p, 0.0) / total;
    }
    return h;
}

ControllerState update_trigger(ControllerState cs, double df, double dfdt, const PevgConfig& cfg) {
    if (cs.mode == Mode::asleep) {
        if (std::abs(dfdt) >= cfg.activation_dfdt) {
            cs.mode = Mode::active;
        }
    } else if (std::abs(df) < cfg.sleep_df && std::abs(dfdt) < cfg.sleep_dfdt) {
        cs.mode = Mode::asleep;
    }
    if (cs.mode == Mode::asleep) {
        cs.output_p = 0.0;
    }
    return cs;
}

ControllerState update_controller(ControllerState cs, double df, double dfdt,
                                  double h_bus_mw_per_hz, double mva_base, const PevgConfig& cfg) {
    cs.filtered_df = df;
    cs.filtered_dfdt = dfdt;
    if (cfg.trigger_enabled) {
        cs = update_trigger(cs, df, dfdt, cfg);
    } else {
        cs.mode = Mode::active;
    }
    cs.output_p = cs.mode == Mode::active
                      ? saturated_droop(df, h_bus_mw_per_hz, cfg.f_sat) / mva_base
                      : 0.0;
    return cs;
}

}  // namespace v2gsim::control
