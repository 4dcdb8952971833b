#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "v2gsim/simulator.hpp"

namespace v2gsim::cli {

enum ExitCode : int {
    kOk = 0,
    kRuntimeError = 1,  // IO, power flow, numerical infrastructure
    kConfigError = 2,   // command line, config file, case file
    kUnstable = 3,      // only with --fail-on-unstable
};

struct CctConfig {
    std::vector<int> buses{7, 12, 13, 18, 25, 32, 38};
    std::vector<double> h{0.0, 0.3, 0.6, 0.9};
    double fault_time = 1.0;
    double bracket_max = 1.0;
    double resolution = 1e-3;
    double post_clear = 10.0;
};

struct AlphaConfig {
    std::vector<double> h{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
};

struct RasConfig {
    std::vector<double> h{0.0};
    int nx = 41;
    int ny = 41;
    double range = 3.141592653589793;
    double horizon = 10.0;
    long max_simulations = -1;
    std::vector<int> machines{1, 2, 3};  // reference, x, y (1-based)
};

/// Everything a command needs. Gains are fractions of the case's total load
/// (MW/Hz per MW) unless `h_mw_per_hz` is set.
struct RunConfig {
    std::string command;
    std::string case_path;
    std::string out_dir = ".";
    int workers = 0;  // 0 = all cores
    double dt = 1e-3;
    std::uint64_t seed = 0;  // reserved; nothing is random yet

    double t_end = 10.0;
    double sample_interval = 0.01;
    double h = 0.0;
    std::optional<double> h_mw_per_hz;
    ControlSettings control;
    nlohmann::json events = nlohmann::json::array();
    bool fail_on_unstable = false;
    bool extracts = true;
    bool json_output = false;

    CctConfig cct;
    AlphaConfig alpha;
    RasConfig ras;
};

[[nodiscard]] nlohmann::json to_json(const RunConfig& cfg);
/// Overlays the keys of `j` onto `cfg`; throws ConfigError naming the key.
void apply_config_json(RunConfig& cfg, const nlohmann::json& j);
/// Range and consistency checks that do not need the case.
void validate(const RunConfig& cfg);

/// Runs `cfg.command`. Reports go to `out`, diagnostics to `err`.
[[nodiscard]] int run(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// Full command line handling, including --help.
[[nodiscard]] int main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace v2gsim::cli
