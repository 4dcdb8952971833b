#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "v2gsim/case.hpp"
#include "v2gsim/simulator.hpp"
#include "v2gsim/stability.hpp"

namespace v2gsim {

using Json = nlohmann::json;

/// Bad scenario or run configuration. `where` is a JSON pointer or flag name.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& where, const std::string& message)
        : std::runtime_error(where + ": " + message) {}
};

// Events and control settings use case-file bus numbers on the outside:
//   {"time": 2.0, "action": "branch_trip", "branch": [5, 6]}
//   {"time": 1.0, "action": "bus_fault_on", "bus": 7}
//   {"time": 1.1, "action": "fault_clear"}

[[nodiscard]] Json event_to_json(const Event& event, const PowerSystemCase& sys);
[[nodiscard]] Event event_from_json(const Json& j, const PowerSystemCase& sys,
                                    const std::string& where = "/events");

[[nodiscard]] Json control_to_json(const ControlSettings& c);
/// Overlays the keys present in `j` onto `base`.
[[nodiscard]] ControlSettings control_from_json(const Json& j, ControlSettings base = {},
                                                const std::string& where = "/control");

[[nodiscard]] Json scenario_to_json(const Scenario& sc, const PowerSystemCase& sys);
/// Overlays the keys present in `j` onto `base` and validates the result.
[[nodiscard]] Scenario scenario_from_json(const Json& j, const PowerSystemCase& sys,
                                          Scenario base = {});

/// Writes each line of `config.dump(2)` prefixed by "# "; nothing for an empty config.
void write_comment_block(std::ostream& os, const Json& config);

/// Full trace: t, delta_g.., omega_g.., v_b.., theta_b.., p_pevg_b..
void write_trace_csv(std::ostream& os, const Trace& trace, const Json& config);
/// Scenario, case, gains, instability marker and sample count.
[[nodiscard]] Json trace_metadata(const Trace& trace, const Json& config);

// Figure-style extracts: one column per machine or bus.
void write_generator_frequencies_csv(std::ostream& os, const Trace& trace, double f0,
                                     const Json& config);
void write_bus_frequencies_csv(std::ostream& os, const Trace& trace, const Json& config);
void write_voltages_csv(std::ostream& os, const Trace& trace, const Json& config);

/// Rows = buses, columns = h. Cells hold the CCT in seconds, ">=<max>" when
/// stable across the bracket, "0" when unclearable and "NaN" on failure.
void write_cct_csv(std::ostream& os, const CctTable& table, const CctOptions& options,
                   const Json& config);
[[nodiscard]] Json cct_json(const CctTable& table, const CctOptions& options, const Json& config);

/// h (as given), h in MW/Hz, alpha; failed points carry NaN and the error text.
void write_alpha_csv(std::ostream& os, const AlphaSweep& sweep, const std::vector<double>& labels,
                     const Json& config);
[[nodiscard]] Json alpha_json(const AlphaSweep& sweep, const std::vector<double>& labels,
                              const Json& config);

/// 0/1 grid, rows = y (machine_y offset), columns = x; -1 where not evaluated.
void write_ras_csv(std::ostream& os, const RasMap& map, const Json& config);
/// gnuplot "nonuniform matrix" layout (`plot 'f' nonuniform matrix with image`).
void write_ras_matrix(std::ostream& os, const RasMap& map, const Json& config);

/// Shortest round-trip decimal for a double.
[[nodiscard]] std::string format_number(double x);

}  // namespace v2gsim
