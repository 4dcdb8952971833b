#include "cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "v2gsim/case.hpp"
#include "v2gsim/dynamic_model.hpp"
#include "v2gsim/io.hpp"
#include "v2gsim/parallel.hpp"
#include "v2gsim/power_flow.hpp"
#include "v2gsim/stability.hpp"

namespace v2gsim::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kToolVersion = "v2gsim 0.1.0";

template <class T>
void take(const json& j, const char* key, T& out, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) {
        return;
    }
    try {
        out = it->get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "/" + key, "wrong type: " + it->dump());
    }
}

void only_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
    if (!j.is_object()) {
        throw ConfigError(where.empty() ? "/" : where, "expected an object");
    }
    for (const auto& [k, v] : j.items()) {
        bool known = false;
        for (const char* key : keys) {
            known = known || k == key;
        }
        if (!known) {
            throw ConfigError(where + "/" + k, "unknown key");
        }
    }
}

std::string label(double h) { return format_number(h); }

std::ofstream open_output(const RunConfig& cfg, const std::string& name) {
    fs::path p = fs::path(cfg.out_dir) / name;
    std::ofstream f(p);
    if (!f) {
        throw std::runtime_error("cannot write " + p.string());
    }
    f << std::setprecision(17);
    return f;
}

double gain_mw_per_hz(const RunConfig&, double fraction, const PowerSystemCase& sys) {
    return fraction * sys.total_load_mw();
}

Scenario build_scenario(const RunConfig& cfg, const PowerSystemCase& sys) {
    Scenario sc;
    sc.t_end = cfg.t_end;
    sc.dt = cfg.dt;
    sc.sample_interval = cfg.sample_interval;
    sc.control = cfg.control;
    sc.control.h_mw_per_hz = cfg.h_mw_per_hz ? *cfg.h_mw_per_hz : gain_mw_per_hz(cfg, cfg.h, sys);
    for (std::size_t i = 0; i < cfg.events.size(); ++i) {
        sc.events.push_back(event_from_json(cfg.events[i], sys, "/events/" + std::to_string(i)));
    }
    try {
        validate_scenario(sys, sc);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("scenario", e.what());
    }
    return sc;
}

CctOptions build_cct_options(const RunConfig& cfg) {
    CctOptions o;
    o.fault_time = cfg.cct.fault_time;
    o.bracket_max = cfg.cct.bracket_max;
    o.resolution = cfg.cct.resolution;
    o.post_clear = cfg.cct.post_clear;
    o.dt = cfg.dt;
    o.sample_interval = cfg.sample_interval;
    o.control = cfg.control;
    return o;
}

RasGrid build_ras_grid(const RunConfig& cfg, const PowerSystemCase& sys) {
    RasGrid g;
    g.nx = cfg.ras.nx;
    g.ny = cfg.ras.ny;
    g.range_x = g.range_y = cfg.ras.range;
    g.horizon = cfg.ras.horizon;
    g.dt = cfg.dt;
    g.max_simulations = cfg.ras.max_simulations;
    const auto& m = cfg.ras.machines;
    for (int k : m) {
        if (k < 1 || k > sys.generator_count()) {
            throw ConfigError("--machines", "machine " + std::to_string(k) + " not in 1.." +
                                                std::to_string(sys.generator_count()));
        }
    }
    g.reference_machine = m[0] - 1;
    g.machine_x = m[1] - 1;
    g.machine_y = m[2] - 1;
    return g;
}

struct Loaded {
    PowerSystemCase sys;
    std::shared_ptr<const DynamicModel> model;
};

PowerSystemCase load(const RunConfig& cfg) {
    if (cfg.case_path.empty()) {
        throw ConfigError("--case", "no case file given");
    }
    return load_case_file(cfg.case_path);
}

int cmd_info(const RunConfig& cfg, std::ostream& out) {
    auto sys = load(cfg);
    auto pf = solve_power_flow(sys);
    double p_gen = 0.0;
    for (double p : pf.p_gen) {
        p_gen += p;
    }
    double load_mw = sys.total_load_mw();
    double losses = p_gen * sys.mva_base - load_mw;
    json j{{"case", sys.name},
           {"buses", sys.bus_count()},
           {"branches", sys.branches.size()},
           {"generators", sys.generator_count()},
           {"total_load_mw", load_mw},
           {"mva_base", sys.mva_base},
           {"frequency_hz", sys.frequency_hz},
           {"slack_bus", sys.buses[static_cast<std::size_t>(sys.slack_bus)].external_id},
           {"power_flow",
            {{"iterations", pf.iterations},
             {"mismatch_pu", pf.mismatch_norm},
             {"generation_mw", p_gen * sys.mva_base},
             {"losses_mw", losses},
             {"v_min_pu", pf.v.minCoeff()},
             {"v_max_pu", pf.v.maxCoeff()}}}};
    if (cfg.json_output) {
        out << j.dump(2) << '\n';
        return kOk;
    }
    out << sys.name << ": " << sys.bus_count() << " buses, " << sys.branches.size() << " branches, "
        << sys.generator_count() << " generators, total load " << std::fixed << std::setprecision(0)
        << load_mw << " MW\n"
        << std::setprecision(2) << "power flow: " << pf.iterations << " iterations, generation "
        << p_gen * sys.mva_base << " MW, losses " << losses << " MW, V in [" << std::setprecision(4)
        << pf.v.minCoeff() << ", " << pf.v.maxCoeff() << "] pu\n";
    out.unsetf(std::ios::fixed);
    return kOk;
}

int cmd_powerflow(const RunConfig& cfg, std::ostream& out) {
    auto sys = load(cfg);
    auto pf = solve_power_flow(sys);
    auto f = open_output(cfg, "powerflow.csv");
    write_comment_block(f, to_json(cfg));
    write_power_flow_csv(f, sys, pf);
    out << "power flow converged in " << pf.iterations << " iterations (mismatch "
        << pf.mismatch_norm << " pu); wrote " << (fs::path(cfg.out_dir) / "powerflow.csv").string()
        << '\n';
    return kOk;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
    auto sys = load(cfg);
    auto sc = build_scenario(cfg, sys);
    auto model = prepare_model(sys);
    auto trace = simulate(model, sc);
    const json config = to_json(cfg);

    std::optional<Verdict> verdict;
    try {
        verdict = classify(trace);
    } catch (const TraceTooShort&) {
    }
    json meta = trace_metadata(trace, config);
    meta["h_mw_per_hz"] = sc.control.h_mw_per_hz;
    meta["verdict"] = verdict ? json(std::string(to_string(*verdict))) : json(nullptr);

    {
        auto f = open_output(cfg, "trace.csv");
        write_trace_csv(f, trace, config);
    }
    {
        auto f = open_output(cfg, "trace.json");
        f << meta.dump(2) << '\n';
    }
    if (cfg.extracts) {
        auto f1 = open_output(cfg, "generator_frequencies.csv");
        write_generator_frequencies_csv(f1, trace, sys.frequency_hz, config);
        auto f2 = open_output(cfg, "bus_frequencies.csv");
        write_bus_frequencies_csv(f2, trace, config);
        auto f3 = open_output(cfg, "voltages.csv");
        write_voltages_csv(f3, trace, config);
    }
    const bool unstable = trace.diverged() || (verdict && *verdict == Verdict::unstable);
    out << trace.samples.size() << " samples to t=" << format_number(trace.samples.back().t)
        << " s; instability: " << to_string(trace.instability.kind);
    if (trace.diverged()) {
        out << " at t=" << format_number(trace.instability.time) << " s";
    }
    out << "; verdict: " << (verdict ? std::string(to_string(*verdict)) : "n/a (short trace)") << '\n';
    return unstable && cfg.fail_on_unstable ? kUnstable : kOk;
}

int cmd_cct(const RunConfig& cfg, std::ostream& out) {
    auto sys = load(cfg);
    for (int b : cfg.cct.buses) {
        if (!sys.bus_index(b)) {
            throw ConfigError("--buses", "no bus " + std::to_string(b) + " in " + sys.name);
        }
    }
    auto model = prepare_model(sys);
    std::vector<double> h_mw;
    for (double h : cfg.cct.h) {
        h_mw.push_back(gain_mw_per_hz(cfg, h, sys));
    }
    auto options = build_cct_options(cfg);
    auto table = cct_table(model, cfg.cct.buses, cfg.cct.h, h_mw, options, cfg.workers);
    const json config = to_json(cfg);
    {
        auto f = open_output(cfg, "cct.csv");
        write_cct_csv(f, table, options, config);
    }
    {
        auto f = open_output(cfg, "cct.json");
        f << cct_json(table, options, config).dump(2) << '\n';
    }
    write_cct_csv(out, table, options, json::object());
    return kOk;
}

int cmd_alpha(const RunConfig& cfg, std::ostream& out) {
    auto sys = load(cfg);
    auto model = prepare_model(sys);
    std::vector<double> h_mw;
    for (double h : cfg.alpha.h) {
        h_mw.push_back(gain_mw_per_hz(cfg, h, sys));
    }
    auto sweep = sweep_alpha(*model, h_mw, cfg.workers);
    const json config = to_json(cfg);
    {
        auto f = open_output(cfg, "alpha.csv");
        write_alpha_csv(f, sweep, cfg.alpha.h, config);
    }
    {
        auto f = open_output(cfg, "alpha.json");
        f << alpha_json(sweep, cfg.alpha.h, config).dump(2) << '\n';
    }
    write_alpha_csv(out, sweep, cfg.alpha.h, json::object());
    return kOk;
}

int cmd_ras(const RunConfig& cfg, std::ostream& out) {
    auto sys = load(cfg);
    auto grid = build_ras_grid(cfg, sys);
    auto model = prepare_model(sys);
    const json config = to_json(cfg);
    json summary{{"config", config}, {"maps", json::array()}};
    std::optional<RasMap> baseline;
    for (double h : cfg.ras.h) {
        auto map = ras_scan(model, gain_mw_per_hz(cfg, h, sys), grid, cfg.control, cfg.workers);
        const std::string stem = "ras_h" + label(h);
        {
            auto f = open_output(cfg, stem + ".csv");
            write_ras_csv(f, map, config);
        }
        {
            auto f = open_output(cfg, stem + ".dat");
            write_ras_matrix(f, map, config);
        }
        json entry{{"h", h},
                   {"h_mw_per_hz", map.h_mw_per_hz},
                   {"stable", map.stable_count()},
                   {"evaluated", map.evaluated_count()},
                   {"complete", map.complete},
                   {"files", {stem + ".csv", stem + ".dat"}}};
        out << "h=" << label(h) << ": " << map.stable_count() << " stable of "
            << map.evaluated_count() << " evaluated" << (map.complete ? "" : " (partial: budget)");
        if (baseline) {
            bool inc = ras_contained(*baseline, map);
            entry["contains_baseline"] = inc;
            out << "; contains h=" << label(cfg.ras.h.front()) << " region: " << (inc ? "yes" : "no");
        }
        out << '\n';
        summary["maps"].push_back(entry);
        if (!baseline) {
            baseline = std::move(map);
        }
    }
    auto f = open_output(cfg, "ras_summary.json");
    f << summary.dump(2) << '\n';
    return kOk;
}

std::vector<double> parse_double_list(const std::string& s, const std::string& flag) {
    std::vector<double> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) {
                throw std::invalid_argument(item);
            }
        } catch (const std::exception&) {
            throw ConfigError(flag, "not a number: '" + item + "'");
        }
    }
    if (out.empty()) {
        throw ConfigError(flag, "empty list");
    }
    return out;
}

std::vector<int> parse_int_list(const std::string& s, const std::string& flag) {
    std::vector<int> out;
    for (double x : parse_double_list(s, flag)) {
        if (x != std::floor(x)) {
            throw ConfigError(flag, "not an integer: " + format_number(x));
        }
        out.push_back(static_cast<int>(x));
    }
    return out;
}

std::pair<int, int> parse_pair(const std::string& s, char sep, const std::string& flag) {
    auto pos = s.find(sep);
    if (pos == std::string::npos) {
        throw ConfigError(flag, "expected A" + std::string(1, sep) + "B, got '" + s + "'");
    }
    auto ints = parse_int_list(s.substr(0, pos) + "," + s.substr(pos + 1), flag);
    return {ints[0], ints[1]};
}

}  // namespace

json to_json(const RunConfig& cfg) {
    json j{{"tool", kToolVersion},
           {"command", cfg.command},
           {"case", cfg.case_path},
           {"out_dir", cfg.out_dir},
           {"workers", cfg.workers},
           {"dt", cfg.dt},
           {"seed", cfg.seed},
           {"control", control_to_json(cfg.control)}};
    j["control"].erase("h_mw_per_hz");
    if (cfg.command == "simulate") {
        j["t_end"] = cfg.t_end;
        j["sample_interval"] = cfg.sample_interval;
        j["h"] = cfg.h;
        if (cfg.h_mw_per_hz) {
            j["h_mw_per_hz"] = *cfg.h_mw_per_hz;
        }
        j["events"] = cfg.events;
        j["fail_on_unstable"] = cfg.fail_on_unstable;
    } else if (cfg.command == "cct") {
        j["sample_interval"] = cfg.sample_interval;
        j["cct"] = {{"buses", cfg.cct.buses},       {"h", cfg.cct.h},
                    {"fault_time", cfg.cct.fault_time}, {"bracket_max", cfg.cct.bracket_max},
                    {"resolution", cfg.cct.resolution}, {"post_clear", cfg.cct.post_clear}};
    } else if (cfg.command == "alpha") {
        j["alpha"] = {{"h", cfg.alpha.h}};
    } else if (cfg.command == "ras") {
        j["ras"] = {{"h", cfg.ras.h},
                    {"grid", std::to_string(cfg.ras.nx) + "x" + std::to_string(cfg.ras.ny)},
                    {"range", cfg.ras.range},
                    {"horizon", cfg.ras.horizon},
                    {"max_simulations", cfg.ras.max_simulations},
                    {"machines", cfg.ras.machines}};
    }
    return j;
}

void apply_config_json(RunConfig& cfg, const json& j) {
    only_keys(j, {"tool", "command", "case", "out_dir", "workers", "dt", "seed", "t_end",
                  "sample_interval", "h", "h_mw_per_hz", "control", "events", "fail_on_unstable",
                  "extracts", "cct", "alpha", "ras"},
              "");
    take(j, "case", cfg.case_path, "");
    take(j, "out_dir", cfg.out_dir, "");
    take(j, "workers", cfg.workers, "");
    take(j, "dt", cfg.dt, "");
    take(j, "seed", cfg.seed, "");
    take(j, "t_end", cfg.t_end, "");
    take(j, "sample_interval", cfg.sample_interval, "");
    take(j, "h", cfg.h, "");
    if (j.contains("h_mw_per_hz")) {
        double v = 0.0;
        take(j, "h_mw_per_hz", v, "");
        cfg.h_mw_per_hz = v;
    }
    take(j, "fail_on_unstable", cfg.fail_on_unstable, "");
    take(j, "extracts", cfg.extracts, "");
    if (auto it = j.find("control"); it != j.end()) {
        cfg.control = control_from_json(*it, cfg.control);
    }
    if (auto it = j.find("events"); it != j.end()) {
        if (!it->is_array()) {
            throw ConfigError("/events", "expected an array");
        }
        cfg.events = *it;
    }
    if (auto it = j.find("cct"); it != j.end()) {
        only_keys(*it, {"buses", "h", "fault_time", "bracket_max", "resolution", "post_clear"}, "/cct");
        take(*it, "buses", cfg.cct.buses, "/cct");
        take(*it, "h", cfg.cct.h, "/cct");
        take(*it, "fault_time", cfg.cct.fault_time, "/cct");
        take(*it, "bracket_max", cfg.cct.bracket_max, "/cct");
        take(*it, "resolution", cfg.cct.resolution, "/cct");
        take(*it, "post_clear", cfg.cct.post_clear, "/cct");
    }
    if (auto it = j.find("alpha"); it != j.end()) {
        only_keys(*it, {"h"}, "/alpha");
        take(*it, "h", cfg.alpha.h, "/alpha");
    }
    if (auto it = j.find("ras"); it != j.end()) {
        only_keys(*it, {"h", "grid", "range", "horizon", "max_simulations", "machines"}, "/ras");
        take(*it, "h", cfg.ras.h, "/ras");
        if (it->contains("grid")) {
            std::string g;
            take(*it, "grid", g, "/ras");
            auto [nx, ny] = parse_pair(g, 'x', "/ras/grid");
            cfg.ras.nx = nx;
            cfg.ras.ny = ny;
        }
        take(*it, "range", cfg.ras.range, "/ras");
        take(*it, "horizon", cfg.ras.horizon, "/ras");
        take(*it, "max_simulations", cfg.ras.max_simulations, "/ras");
        take(*it, "machines", cfg.ras.machines, "/ras");
    }
}

void validate(const RunConfig& cfg) {
    auto positive = [](double v, const char* what) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw ConfigError(what, "must be a positive number");
        }
    };
    positive(cfg.dt, "--dt");
    positive(cfg.t_end, "--t-end");
    positive(cfg.sample_interval, "--sample-interval");
    if (cfg.workers < 0) {
        throw ConfigError("--workers", "must be >= 0");
    }
    auto non_negative = [](const std::vector<double>& v, const char* what) {
        for (double x : v) {
            if (!(x >= 0.0) || !std::isfinite(x)) {
                throw ConfigError(what, "gains must be finite and >= 0");
            }
        }
    };
    non_negative({cfg.h}, "--h");
    if (cfg.h_mw_per_hz) {
        non_negative({*cfg.h_mw_per_hz}, "h_mw_per_hz");
    }
    non_negative(cfg.cct.h, "/cct/h");
    non_negative(cfg.alpha.h, "/alpha/h");
    non_negative(cfg.ras.h, "/ras/h");
    if (cfg.cct.buses.empty() || cfg.cct.h.empty()) {
        throw ConfigError("/cct", "bus and h lists must be non-empty");
    }
    positive(cfg.cct.bracket_max, "/cct/bracket_max");
    positive(cfg.cct.resolution, "/cct/resolution");
    positive(cfg.cct.post_clear, "/cct/post_clear");
    if (cfg.cct.fault_time < 0.0) {
        throw ConfigError("/cct/fault_time", "must be >= 0");
    }
    if (cfg.ras.nx < 1 || cfg.ras.ny < 1) {
        throw ConfigError("--grid", "needs at least 1x1 points");
    }
    if (cfg.ras.machines.size() != 3) {
        throw ConfigError("--machines", "expected reference,x,y");
    }
    positive(cfg.ras.range, "--range");
    positive(cfg.ras.horizon, "--horizon");
}

int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    try {
        validate(cfg);
        if (cfg.command != "info") {
            fs::create_directories(cfg.out_dir);
        }
        if (cfg.command == "info") {
            return cmd_info(cfg, out);
        }
        if (cfg.command == "powerflow") {
            return cmd_powerflow(cfg, out);
        }
        if (cfg.command == "simulate") {
            return cmd_simulate(cfg, out);
        }
        if (cfg.command == "cct") {
            return cmd_cct(cfg, out);
        }
        if (cfg.command == "alpha") {
            return cmd_alpha(cfg, out);
        }
        if (cfg.command == "ras") {
            return cmd_ras(cfg, out);
        }
        throw ConfigError("command", "unknown command '" + cfg.command + "'");
    } catch (const CaseError& e) {
        err << "error: case file " << cfg.case_path << ": " << e.what() << '\n';
        return kConfigError;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
}

int main(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Power-system dynamics with frequency-responsive EV charging", "v2gsim"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);
    // "-h" would clash with the gain option "--h".
    app.set_help_flag("--help", "Print this help message and exit");

    RunConfig cfg;
    std::string config_path;
    std::string positional_case;

    auto add_common = [&](CLI::App* sub) {
        sub->set_help_flag("--help", "Print this help message and exit");
        sub->add_option("case_file", positional_case, "Case file (same as --case)");
        sub->add_option("--case", cfg.case_path, "Case file (JSON)");
        sub->add_option("--out-dir", cfg.out_dir, "Directory for output files")->capture_default_str();
        sub->add_option("--workers", cfg.workers, "Worker threads, 0 = all cores")->capture_default_str();
        sub->add_option("--dt", cfg.dt, "Integration step, s")->capture_default_str();
        sub->add_option("--seed", cfg.seed, "Reserved; no stochastic paths")->capture_default_str();
        sub->add_option("--config", config_path, "JSON file whose keys override the flags");
        sub->add_option("--washout-tw", cfg.control.washout_tw, "Frequency-measurement washout time constant, s")
            ->capture_default_str();
        sub->add_option("--activation-dfdt", cfg.control.activation_dfdt, "Wake threshold on |d(df)/dt|, Hz/s")
            ->capture_default_str();
        sub->add_option("--sleep-df", cfg.control.sleep_df, "Sleep threshold on |df|, Hz")->capture_default_str();
        sub->add_option("--sleep-dfdt", cfg.control.sleep_dfdt, "Sleep threshold on |d(df)/dt|, Hz/s")
            ->capture_default_str();
        sub->add_flag("--always-active{false}", cfg.control.trigger_enabled,
                      "Disable the sleep/wake trigger (droop always on)");
    };

    auto* info = app.add_subcommand("info", "Case summary and power-flow check");
    add_common(info);
    info->add_flag("--json", cfg.json_output, "Print the summary as JSON");

    auto* pf = app.add_subcommand("powerflow", "Solve the power flow and write powerflow.csv");
    add_common(pf);

    std::string trip, fault;
    double at = 0.0;
    double dur = 0.0;
    auto* sim = app.add_subcommand("simulate", "Time-domain run; writes trace.csv, trace.json and extracts");
    add_common(sim);
    sim->add_option("--t-end", cfg.t_end, "Simulated time, s")->capture_default_str();
    sim->add_option("--sample-interval", cfg.sample_interval, "Trace sample spacing, s")->capture_default_str();
    sim->add_option("--h", cfg.h, "PEV gain as a fraction of total load (MW/Hz per MW)")->capture_default_str();
    sim->add_option("--trip", trip, "Trip branch FROM-TO at --at, restore after --dur (0 = stay out)");
    sim->add_option("--fault", fault, "Bolted fault at bus N at --at, cleared after --dur");
    sim->add_option("--at", at, "Event start time, s")->capture_default_str();
    sim->add_option("--dur", dur, "Event duration, s")->capture_default_str();
    sim->add_flag("--fail-on-unstable", cfg.fail_on_unstable, "Exit with code 3 if the run is unstable");
    sim->add_flag("--no-extracts{false}", cfg.extracts, "Skip the per-figure extract files");

    std::string buses, cct_h;
    auto* cct = app.add_subcommand("cct", "Critical clearing times, rows = buses, columns = h");
    add_common(cct);
    cct->add_option("--buses", buses, "Comma-separated fault buses (default 7,12,13,18,25,32,38)");
    cct->add_option("--h", cct_h, "Comma-separated gains as load fractions (default 0,0.3,0.6,0.9)");
    cct->add_option("--fault-time", cfg.cct.fault_time, "Fault inception, s")->capture_default_str();
    cct->add_option("--bracket-max", cfg.cct.bracket_max, "Upper end of the search, s")->capture_default_str();
    cct->add_option("--resolution", cfg.cct.resolution, "Final bracket width, s")->capture_default_str();
    cct->add_option("--post-clear", cfg.cct.post_clear, "Simulated time after clearing, s")->capture_default_str();

    std::string alpha_h;
    auto* alpha = app.add_subcommand("alpha", "Small-signal indicator alpha over a gain grid");
    add_common(alpha);
    alpha->add_option("--h", alpha_h, "Comma-separated gains as load fractions (default 0,0.1,...,1)");

    std::string ras_h, grid, machines;
    auto* ras = app.add_subcommand("ras", "Region-of-attraction scan over two rotor-angle offsets");
    add_common(ras);
    ras->add_option("--h", ras_h, "Comma-separated gains; the first is the inclusion baseline (default 0)");
    ras->add_option("--grid", grid, "Points per axis as NXxNY (default 41x41)");
    ras->add_option("--range", cfg.ras.range, "Half-width of both axes, rad")->capture_default_str();
    ras->add_option("--horizon", cfg.ras.horizon, "Simulated time per point, s")->capture_default_str();
    ras->add_option("--max-simulations", cfg.ras.max_simulations, "Budget; < 0 = unlimited")
        ->capture_default_str();
    ras->add_option("--machines", machines, "Reference,x,y machines, 1-based (default 1,2,3)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            // --help / --version
            std::ostringstream msg;
            app.exit(e, msg, msg);
            out << msg.str();
            return kOk;
        }
        std::ostringstream msg;
        app.exit(e, msg, msg);
        err << msg.str();
        return kConfigError;
    }

    try {
        for (auto* sub : app.get_subcommands()) {
            cfg.command = sub->get_name();
        }
        if (!positional_case.empty()) {
            if (!cfg.case_path.empty() && cfg.case_path != positional_case) {
                throw ConfigError("--case", "given twice with different values");
            }
            cfg.case_path = positional_case;
        }
        if (!trip.empty() && !fault.empty()) {
            throw ConfigError("--trip", "cannot be combined with --fault");
        }
        if (!trip.empty()) {
            auto [f, t] = parse_pair(trip, '-', "--trip");
            cfg.events.push_back({{"time", at}, {"action", "branch_trip"}, {"branch", {f, t}}});
            if (dur > 0.0) {
                cfg.events.push_back({{"time", at + dur}, {"action", "branch_restore"}, {"branch", {f, t}}});
            }
        }
        if (!fault.empty()) {
            int bus = parse_int_list(fault, "--fault").front();
            cfg.events.push_back({{"time", at}, {"action", "bus_fault_on"}, {"bus", bus}});
            if (dur > 0.0) {
                cfg.events.push_back({{"time", at + dur}, {"action", "fault_clear"}});
            }
        }
        if (!buses.empty()) {
            cfg.cct.buses = parse_int_list(buses, "--buses");
        }
        if (!cct_h.empty()) {
            cfg.cct.h = parse_double_list(cct_h, "--h");
        }
        if (!alpha_h.empty()) {
            cfg.alpha.h = parse_double_list(alpha_h, "--h");
        }
        if (!ras_h.empty()) {
            cfg.ras.h = parse_double_list(ras_h, "--h");
        }
        if (!grid.empty()) {
            auto [nx, ny] = parse_pair(grid, 'x', "--grid");
            cfg.ras.nx = nx;
            cfg.ras.ny = ny;
        }
        if (!machines.empty()) {
            cfg.ras.machines = parse_int_list(machines, "--machines");
        }
        if (!config_path.empty()) {
            std::ifstream f(config_path);
            if (!f) {
                throw ConfigError("--config", "cannot read " + config_path);
            }
            json j;
            try {
                j = json::parse(f);
            } catch (const json::parse_error& e) {
                throw ConfigError("--config", config_path + ": " + e.what());
            }
            apply_config_json(cfg, j);
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    }
    return run(cfg, out, err);
}

}  // namespace v2gsim::cli
