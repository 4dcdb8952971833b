#include "v2gsim/io.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

namespace v2gsim {

std::string format_number(double x) {
    if (std::isnan(x)) {
        return "NaN";
    }
    if (std::isinf(x)) {
        return x > 0 ? "Inf" : "-Inf";
    }
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return {buf, res.ptr};
}

namespace {

EventKind parse_action(const std::string& s, const std::string& where) {
    for (auto k : {EventKind::bus_fault_on, EventKind::fault_clear, EventKind::branch_trip,
                   EventKind::branch_restore}) {
        if (s == to_string(k)) {
            return k;
        }
    }
    throw ConfigError(where + "/action", "unknown action '" + s + "'");
}

template <class T>
T get_as(const Json& j, const std::string& where) {
    try {
        return j.get<T>();
    } catch (const Json::exception&) {
        throw ConfigError(where, "expected " + std::string(std::is_same_v<T, bool> ? "a boolean"
                                                           : std::is_integral_v<T> ? "an integer"
                                                           : std::is_floating_point_v<T>
                                                               ? "a number"
                                                               : "a string") +
                                     ", got " + j.dump());
    }
}

template <class T>
void overlay(const Json& j, const char* key, T& out, const std::string& where) {
    if (auto it = j.find(key); it != j.end()) {
        out = get_as<T>(*it, where + "/" + key);
    }
}

void reject_unknown(const Json& j, std::initializer_list<const char*> known, const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* k : known) {
            ok = ok || key == k;
        }
        if (!ok) {
            throw ConfigError(where + "/" + key, "unknown key");
        }
    }
}

void header_line(std::ostream& os, const std::vector<std::string>& cols) {
    for (std::size_t i = 0; i < cols.size(); ++i) {
        os << (i ? "," : "") << cols[i];
    }
    os << '\n';
}

}  // namespace

Json event_to_json(const Event& event, const PowerSystemCase& sys) {
    Json j{{"time", event.time}, {"action", std::string(to_string(event.kind))}};
    switch (event.kind) {
    case EventKind::bus_fault_on:
        j["bus"] = sys.buses[static_cast<std::size_t>(event.target)].external_id;
        break;
    case EventKind::branch_trip:
    case EventKind::branch_restore: {
        const auto& br = sys.branches[static_cast<std::size_t>(event.target)];
        j["branch"] = {sys.buses[static_cast<std::size_t>(br.from)].external_id,
                       sys.buses[static_cast<std::size_t>(br.to)].external_id};
        break;
    }
    case EventKind::fault_clear:
        break;
    }
    return j;
}

Event event_from_json(const Json& j, const PowerSystemCase& sys, const std::string& where) {
    if (!j.is_object()) {
        throw ConfigError(where, "event must be an object");
    }
    reject_unknown(j, {"time", "action", "bus", "branch"}, where);
    if (!j.contains("time") || !j.contains("action")) {
        throw ConfigError(where, "event needs 'time' and 'action'");
    }
    Event ev;
    ev.time = get_as<double>(j["time"], where + "/time");
    ev.kind = parse_action(get_as<std::string>(j["action"], where + "/action"), where);
    switch (ev.kind) {
    case EventKind::bus_fault_on: {
        if (!j.contains("bus")) {
            throw ConfigError(where, "bus_fault_on needs 'bus'");
        }
        int ext = get_as<int>(j["bus"], where + "/bus");
        auto idx = sys.bus_index(ext);
        if (!idx) {
            throw ConfigError(where + "/bus", "no bus " + std::to_string(ext) + " in the case");
        }
        ev.target = *idx;
        break;
    }
    case EventKind::branch_trip:
    case EventKind::branch_restore: {
        const auto& b = j.contains("branch") ? j["branch"] : Json();
        if (!b.is_array() || b.size() != 2) {
            throw ConfigError(where + "/branch", "expected [from, to]");
        }
        int f = get_as<int>(b[0], where + "/branch/0");
        int t = get_as<int>(b[1], where + "/branch/1");
        auto idx = sys.branch_index(f, t);
        if (!idx) {
            throw ConfigError(where + "/branch",
                              "no in-service branch " + std::to_string(f) + "-" + std::to_string(t));
        }
        ev.target = *idx;
        break;
    }
    case EventKind::fault_clear:
        ev.target = -1;
        break;
    }
    return ev;
}

Json control_to_json(const ControlSettings& c) {
    return {{"h_mw_per_hz", c.h_mw_per_hz},         {"activation_dfdt", c.activation_dfdt},
            {"sleep_df", c.sleep_df},               {"sleep_dfdt", c.sleep_dfdt},
            {"washout_tw", c.washout_tw},           {"trigger_enabled", c.trigger_enabled}};
}

ControlSettings control_from_json(const Json& j, ControlSettings base, const std::string& where) {
    if (!j.is_object()) {
        throw ConfigError(where, "expected an object");
    }
    reject_unknown(j, {"h_mw_per_hz", "activation_dfdt", "sleep_df", "sleep_dfdt", "washout_tw",
                       "trigger_enabled"},
                   where);
    overlay(j, "h_mw_per_hz", base.h_mw_per_hz, where);
    overlay(j, "activation_dfdt", base.activation_dfdt, where);
    overlay(j, "sleep_df", base.sleep_df, where);
    overlay(j, "sleep_dfdt", base.sleep_dfdt, where);
    overlay(j, "washout_tw", base.washout_tw, where);
    overlay(j, "trigger_enabled", base.trigger_enabled, where);
    if (base.h_mw_per_hz < 0.0 || !std::isfinite(base.h_mw_per_hz)) {
        throw ConfigError(where + "/h_mw_per_hz", "must be finite and >= 0");
    }
    for (auto [v, name] : {std::pair{base.activation_dfdt, "activation_dfdt"},
                           std::pair{base.sleep_df, "sleep_df"},
                           std::pair{base.sleep_dfdt, "sleep_dfdt"}}) {
        if (!(v > 0.0)) {
            throw ConfigError(where + "/" + name, "must be > 0");
        }
    }
    if (base.washout_tw < 0.0) {
        throw ConfigError(where + "/washout_tw", "must be >= 0");
    }
    return base;
}

Json scenario_to_json(const Scenario& sc, const PowerSystemCase& sys) {
    Json events = Json::array();
    for (const auto& ev : sc.events) {
        events.push_back(event_to_json(ev, sys));
    }
    return {{"events", events},
            {"t_end", sc.t_end},
            {"dt", sc.dt},
            {"sample_interval", sc.sample_interval},
            {"control", control_to_json(sc.control)},
            {"network",
             {{"tolerance", sc.network.tolerance},
              {"max_iterations", sc.network.max_iterations},
              {"pevg_breakpoint_v", sc.network.pevg_breakpoint_v}}},
            {"stop_on_loss_of_sync", sc.stop_on_loss_of_sync}};
}

Scenario scenario_from_json(const Json& j, const PowerSystemCase& sys, Scenario base) {
    if (!j.is_object()) {
        throw ConfigError("", "scenario must be an object");
    }
    reject_unknown(j, {"events", "t_end", "dt", "sample_interval", "control", "network",
                       "stop_on_loss_of_sync"},
                   "");
    if (auto it = j.find("events"); it != j.end()) {
        if (!it->is_array()) {
            throw ConfigError("/events", "expected an array");
        }
        base.events.clear();
        for (std::size_t i = 0; i < it->size(); ++i) {
            base.events.push_back(event_from_json((*it)[i], sys, "/events/" + std::to_string(i)));
        }
    }
    overlay(j, "t_end", base.t_end, "");
    overlay(j, "dt", base.dt, "");
    overlay(j, "sample_interval", base.sample_interval, "");
    overlay(j, "stop_on_loss_of_sync", base.stop_on_loss_of_sync, "");
    if (auto it = j.find("control"); it != j.end()) {
        base.control = control_from_json(*it, base.control);
    }
    if (auto it = j.find("network"); it != j.end()) {
        reject_unknown(*it, {"tolerance", "max_iterations", "pevg_breakpoint_v"}, "/network");
        overlay(*it, "tolerance", base.network.tolerance, "/network");
        overlay(*it, "max_iterations", base.network.max_iterations, "/network");
        overlay(*it, "pevg_breakpoint_v", base.network.pevg_breakpoint_v, "/network");
    }
    try {
        validate_scenario(sys, base);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("scenario", e.what());
    }
    return base;
}

void write_comment_block(std::ostream& os, const Json& config) {
    if (config.is_null() || config.empty()) {
        return;
    }
    std::istringstream lines(config.dump(2));
    for (std::string line; std::getline(lines, line);) {
        os << "# " << line << '\n';
    }
}

void write_trace_csv(std::ostream& os, const Trace& trace, const Json& config) {
    write_comment_block(os, config);
    std::vector<std::string> cols{"t"};
    const std::size_t n = trace.machine_buses.size();
    for (std::size_t g = 0; g < n; ++g) {
        cols.push_back("delta_g" + std::to_string(g + 1));
    }
    for (std::size_t g = 0; g < n; ++g) {
        cols.push_back("omega_g" + std::to_string(g + 1));
    }
    for (const char* q : {"v", "theta", "p_pevg"}) {
        for (int id : trace.bus_ids) {
            cols.push_back(std::string(q) + "_b" + std::to_string(id));
        }
    }
    header_line(os, cols);
    for (const auto& s : trace.samples) {
        os << format_number(s.t);
        for (const auto* col : {&s.delta, &s.omega, &s.v, &s.theta, &s.p_pevg}) {
            for (double x : *col) {
                os << ',' << format_number(x);
            }
        }
        os << '\n';
    }
}

Json trace_metadata(const Trace& trace, const Json& config) {
    Json inst{{"kind", std::string(to_string(trace.instability.kind))}};
    if (trace.diverged()) {
        inst["time"] = trace.instability.time;
        inst["detail"] = trace.instability.detail;
    }
    return {{"case", trace.case_name},
            {"config", config},
            {"bus_ids", trace.bus_ids},
            {"machine_buses", trace.machine_buses},
            {"samples", trace.samples.size()},
            {"t_final", trace.samples.empty() ? 0.0 : trace.samples.back().t},
            {"last_event_time", trace.last_event_time},
            {"instability", inst}};
}

void write_generator_frequencies_csv(std::ostream& os, const Trace& trace, double f0,
                                     const Json& config) {
    write_comment_block(os, config);
    std::vector<std::string> cols{"t"};
    for (std::size_t g = 0; g < trace.machine_buses.size(); ++g) {
        cols.push_back("f_g" + std::to_string(g + 1) + "_bus" +
                       std::to_string(trace.machine_buses[g]) + "_hz");
    }
    header_line(os, cols);
    for (const auto& s : trace.samples) {
        os << format_number(s.t);
        for (double w : s.omega) {
            os << ',' << format_number(f0 + w / (2.0 * std::numbers::pi));
        }
        os << '\n';
    }
}

void write_bus_frequencies_csv(std::ostream& os, const Trace& trace, const Json& config) {
    write_comment_block(os, config);
    std::vector<std::string> cols{"t"};
    for (int id : trace.bus_ids) {
        cols.push_back("df_b" + std::to_string(id) + "_hz");
    }
    header_line(os, cols);
    for (const auto& s : trace.samples) {
        os << format_number(s.t);
        for (double df : s.df) {
            os << ',' << format_number(df);
        }
        os << '\n';
    }
}

void write_voltages_csv(std::ostream& os, const Trace& trace, const Json& config) {
    write_comment_block(os, config);
    std::vector<std::string> cols{"t"};
    for (int id : trace.bus_ids) {
        cols.push_back("v_b" + std::to_string(id) + "_pu");
    }
    header_line(os, cols);
    for (const auto& s : trace.samples) {
        os << format_number(s.t);
        for (double v : s.v) {
            os << ',' << format_number(v);
        }
        os << '\n';
    }
}

namespace {

std::string cct_cell(const CctResult& r, const CctOptions& options) {
    switch (r.status) {
    case CctResult::Status::found:
        return format_number(r.cct);
    case CctResult::Status::stable_at_max:
        return ">=" + format_number(options.bracket_max);
    case CctResult::Status::unclearable:
        return "0";
    case CctResult::Status::failed:
        break;
    }
    return "NaN";
}

}  // namespace

void write_cct_csv(std::ostream& os, const CctTable& table, const CctOptions& options,
                   const Json& config) {
    write_comment_block(os, config);
    std::vector<std::string> cols{"bus"};
    for (double h : table.h_values) {
        cols.push_back("h=" + format_number(h));
    }
    header_line(os, cols);
    for (std::size_t r = 0; r < table.buses.size(); ++r) {
        os << table.buses[r];
        for (std::size_t c = 0; c < table.h_values.size(); ++c) {
            os << ',' << cct_cell(table.at(r, c), options);
        }
        os << '\n';
    }
}

Json cct_json(const CctTable& table, const CctOptions& options, const Json& config) {
    Json cells = Json::array();
    for (std::size_t r = 0; r < table.buses.size(); ++r) {
        for (std::size_t c = 0; c < table.h_values.size(); ++c) {
            const auto& cell = table.at(r, c);
            Json j{{"bus", table.buses[r]},
                   {"h", table.h_values[c]},
                   {"h_mw_per_hz", table.h_mw_per_hz[c]},
                   {"status", std::string(to_string(cell.status))},
                   {"simulations", cell.simulations}};
            j["cct_s"] = std::isnan(cell.cct) ? Json(nullptr) : Json(cell.cct);
            if (!cell.message.empty()) {
                j["error"] = cell.message;
            }
            cells.push_back(j);
        }
    }
    return {{"config", config},
            {"bracket_max_s", options.bracket_max},
            {"resolution_s", options.resolution},
            {"fault_time_s", options.fault_time},
            {"buses", table.buses},
            {"h", table.h_values},
            {"cells", cells}};
}

void write_alpha_csv(std::ostream& os, const AlphaSweep& sweep, const std::vector<double>& labels,
                     const Json& config) {
    write_comment_block(os, config);
    header_line(os, {"h", "h_mw_per_hz", "alpha"});
    for (std::size_t i = 0; i < sweep.alpha.size(); ++i) {
        os << format_number(labels[i]) << ',' << format_number(sweep.h_mw_per_hz[i]) << ','
           << format_number(sweep.alpha[i]) << '\n';
    }
    if (sweep.argmin >= 0) {
        const auto k = static_cast<std::size_t>(sweep.argmin);
        os << "# argmin h=" << format_number(labels[k]) << " alpha=" << format_number(sweep.alpha[k])
           << (k == 0 || k + 1 == sweep.alpha.size() ? " (grid edge)" : " (interior)") << '\n';
    }
}

Json alpha_json(const AlphaSweep& sweep, const std::vector<double>& labels, const Json& config) {
    Json points = Json::array();
    for (std::size_t i = 0; i < sweep.alpha.size(); ++i) {
        Json p{{"h", labels[i]}, {"h_mw_per_hz", sweep.h_mw_per_hz[i]}};
        p["alpha"] = std::isnan(sweep.alpha[i]) ? Json(nullptr) : Json(sweep.alpha[i]);
        if (!sweep.errors[i].empty()) {
            p["error"] = sweep.errors[i];
        }
        points.push_back(p);
    }
    Json out{{"config", config}, {"points", points}};
    if (sweep.argmin >= 0) {
        const auto k = static_cast<std::size_t>(sweep.argmin);
        out["argmin"] = {{"index", sweep.argmin},
                         {"h", labels[k]},
                         {"alpha", sweep.alpha[k]},
                         {"interior", k != 0 && k + 1 != sweep.alpha.size()}};
    }
    return out;
}

void write_ras_csv(std::ostream& os, const RasMap& map, const Json& config) {
    write_comment_block(os, config);
    os << "# rows: offset of machine " << map.grid.machine_y + 1 << " from "
       << format_number(map.ys.front()) << " to " << format_number(map.ys.back())
       << " rad; columns: machine " << map.grid.machine_x + 1 << " from "
       << format_number(map.xs.front()) << " to " << format_number(map.xs.back()) << " rad\n";
    for (std::size_t iy = 0; iy < map.ys.size(); ++iy) {
        for (std::size_t ix = 0; ix < map.xs.size(); ++ix) {
            os << (ix ? "," : "") << static_cast<int>(map.at(static_cast<int>(ix), static_cast<int>(iy)));
        }
        os << '\n';
    }
}

void write_ras_matrix(std::ostream& os, const RasMap& map, const Json& config) {
    write_comment_block(os, config);
    os << map.xs.size();
    for (double x : map.xs) {
        os << ' ' << format_number(x);
    }
    os << '\n';
    for (std::size_t iy = 0; iy < map.ys.size(); ++iy) {
        os << format_number(map.ys[iy]);
        for (std::size_t ix = 0; ix < map.xs.size(); ++ix) {
            os << ' ' << static_cast<int>(map.at(static_cast<int>(ix), static_cast<int>(iy)));
        }
        os << '\n';
    }
}

}  // namespace v2gsim
