#include "v2gsim/case.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <queue>
#include <sstream>

#include <nlohmann/json.hpp>

namespace v2gsim {

using nlohmann::json;

std::string_view to_string(BusKind kind) {
    switch (kind) {
    case BusKind::generator:
        return "generator";
    case BusKind::load:
        return "load";
    case BusKind::both:
        return "both";
    }
    return "load";
}

std::optional<int> PowerSystemCase::bus_index(int external_id) const {
    for (const auto& bus : buses) {
        if (bus.external_id == external_id) {
            return bus.id;
        }
    }
    return std::nullopt;
}

std::optional<int> PowerSystemCase::branch_index(int from_external, int to_external) const {
    auto a = bus_index(from_external);
    auto b = bus_index(to_external);
    if (!a || !b) {
        return std::nullopt;
    }
    for (std::size_t k = 0; k < branches.size(); ++k) {
        const auto& br = branches[k];
        if ((br.from == *a && br.to == *b) || (br.from == *b && br.to == *a)) {
            return static_cast<int>(k);
        }
    }
    return std::nullopt;
}

double PowerSystemCase::total_load_mw() const {
    double total = 0.0;
    for (const auto& bus : buses) {
        total += bus.load_p;
    }
    return total * mva_base;
}

std::vector<std::vector<int>> PowerSystemCase::generators_by_bus() const {
    std::vector<std::vector<int>> out(buses.size());
    for (std::size_t g = 0; g < generators.size(); ++g) {
        out[static_cast<std::size_t>(generators[g].bus)].push_back(static_cast<int>(g));
    }
    return out;
}

namespace {

std::string pointer(std::string_view base, std::size_t index, std::string_view field = {}) {
    std::ostringstream os;
    os << base << '/' << index;
    if (!field.empty()) {
        os << '/' << field;
    }
    return os.str();
}

const json& require(const json& obj, std::string_view key, const std::string& where) {
    if (!obj.is_object()) {
        throw CaseError(where, "expected an object");
    }
    auto it = obj.find(std::string(key));
    if (it == obj.end()) {
        throw CaseError(where + "/" + std::string(key), "missing required field");
    }
    return *it;
}

double number(const json& value, const std::string& where) {
    if (!value.is_number()) {
        throw CaseError(where, "expected a number, got " + std::string(value.type_name()));
    }
    double v = value.get<double>();
    if (!std::isfinite(v)) {
        throw CaseError(where, "value is not finite");
    }
    return v;
}

double require_number(const json& obj, std::string_view key, const std::string& where) {
    return number(require(obj, key, where), where + "/" + std::string(key));
}

double optional_number(const json& obj, std::string_view key, const std::string& where,
                       double fallback) {
    auto it = obj.find(std::string(key));
    if (it == obj.end() || it->is_null()) {
        return fallback;
    }
    return number(*it, where + "/" + std::string(key));
}

int require_integer(const json& obj, std::string_view key, const std::string& where) {
    const auto& value = require(obj, key, where);
    std::string path = where + "/" + std::string(key);
    if (!value.is_number_integer()) {
        throw CaseError(path, "expected an integer bus number");
    }
    return value.get<int>();
}

const json& require_array(const json& root, std::string_view key) {
    const auto& value = require(root, key, "");
    if (!value.is_array()) {
        throw CaseError("/" + std::string(key), "expected an array");
    }
    return value;
}

BusKind parse_kind(const json& value, const std::string& where) {
    if (!value.is_string()) {
        throw CaseError(where, "expected one of \"generator\", \"load\", \"both\"");
    }
    auto s = value.get<std::string>();
    if (s == "generator") {
        return BusKind::generator;
    }
    if (s == "load") {
        return BusKind::load;
    }
    if (s == "both") {
        return BusKind::both;
    }
    throw CaseError(where, "unknown bus kind \"" + s + "\"");
}

std::string line_column(std::string_view text, std::size_t byte) {
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    std::ostringstream os;
    os << "line " << line << ", column " << column;
    return os.str();
}

}  // namespace

PowerSystemCase parse_case(std::string_view text) {
    json root;
    try {
        root = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        // nlohmann reports the byte just past the offending token.
        std::size_t byte = e.byte > 0 ? e.byte - 1 : 0;
        std::string what = e.what();
        auto pos = what.find("syntax error");
        throw CaseError(line_column(text, byte),
                        pos == std::string::npos ? what : what.substr(pos));
    }
    if (!root.is_object()) {
        throw CaseError("/", "top level must be an object");
    }

    PowerSystemCase sys;
    if (auto it = root.find("name"); it != root.end() && it->is_string()) {
        sys.name = it->get<std::string>();
    }

    const auto& system = require(root, "system", "");
    sys.mva_base = require_number(system, "mva_base", "/system");
    sys.frequency_hz = optional_number(system, "frequency_hz", "/system", 50.0);
    if (sys.mva_base <= 0.0) {
        throw CaseError("/system/mva_base", "must be positive");
    }
    if (sys.frequency_hz <= 0.0) {
        throw CaseError("/system/frequency_hz", "must be positive");
    }

    std::map<int, int> index_of;
    const auto& buses = require_array(root, "buses");
    for (std::size_t i = 0; i < buses.size(); ++i) {
        std::string where = pointer("/buses", i);
        const auto& b = buses[i];
        Bus bus;
        bus.id = static_cast<int>(i);
        bus.external_id = require_integer(b, "id", where);
        bus.kind = parse_kind(require(b, "kind", where), where + "/kind");
        bus.base_kv = optional_number(b, "base_kv", where, 1.0);
        bus.load_p = optional_number(b, "load_mw", where, 0.0) / sys.mva_base;
        bus.load_q = optional_number(b, "load_mvar", where, 0.0) / sys.mva_base;
        if (bus.base_kv <= 0.0) {
            throw CaseError(where + "/base_kv", "must be positive");
        }
        if (!index_of.emplace(bus.external_id, bus.id).second) {
            throw CaseError(where + "/id",
                            "duplicate bus id " + std::to_string(bus.external_id));
        }
        sys.buses.push_back(bus);
    }
    if (sys.buses.empty()) {
        throw CaseError("/buses", "case has no buses");
    }

    auto resolve = [&](const json& obj, std::string_view key, const std::string& where) {
        int ext = require_integer(obj, key, where);
        auto it = index_of.find(ext);
        if (it == index_of.end()) {
            throw CaseError(where + "/" + std::string(key),
                            "unknown bus id " + std::to_string(ext));
        }
        return it->second;
    };

    const auto& branches = require_array(root, "branches");
    for (std::size_t i = 0; i < branches.size(); ++i) {
        std::string where = pointer("/branches", i);
        const auto& b = branches[i];
        Branch br;
        br.from = resolve(b, "from", where);
        br.to = resolve(b, "to", where);
        br.r = require_number(b, "r_pu", where);
        br.x = require_number(b, "x_pu", where);
        br.b = optional_number(b, "b_pu", where, 0.0);
        br.tap = optional_number(b, "tap", where, 1.0);
        if (br.tap == 0.0) {
            br.tap = 1.0;  // MATPOWER convention: 0 means no transformer
        }
        if (auto it = b.find("in_service"); it != b.end()) {
            if (!it->is_boolean()) {
                throw CaseError(where + "/in_service", "expected a boolean");
            }
            br.in_service = it->get<bool>();
        }
        sys.branches.push_back(br);
    }

    const auto& gens = require_array(root, "generators");
    for (std::size_t i = 0; i < gens.size(); ++i) {
        std::string where = pointer("/generators", i);
        const auto& g = gens[i];
        Generator gen;
        gen.bus = resolve(g, "bus", where);
        gen.m = require_number(g, "m", where);
        gen.d = require_number(g, "d", where);
        gen.xd_prime = require_number(g, "xd_prime_pu", where);
        gen.p_sched = optional_number(g, "p_mw", where, 0.0) / sys.mva_base;
        gen.v_set = optional_number(g, "v_pu", where, 1.0);
        sys.generators.push_back(gen);
    }

    if (auto it = root.find("slack_bus"); it != root.end()) {
        sys.slack_bus = resolve(root, "slack_bus", "");
    } else if (!sys.generators.empty()) {
        sys.slack_bus = sys.generators.front().bus;
    }

    validate_case(sys);
    return sys;
}

PowerSystemCase load_case_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw CaseError(path, "cannot open case file");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    try {
        auto sys = parse_case(buffer.str());
        if (sys.name.empty()) {
            auto slash = path.find_last_of("/\\");
            auto base = path.substr(slash == std::string::npos ? 0 : slash + 1);
            sys.name = base.substr(0, base.find_last_of('.'));
        }
        return sys;
    } catch (const CaseError& e) {
        throw CaseError(path + ": " + e.location(),
                        std::string(e.what()).substr(e.location().size() + 2));
    }
}

void validate_case(const PowerSystemCase& sys) {
    const int n = sys.bus_count();
    for (std::size_t i = 0; i < sys.buses.size(); ++i) {
        if (sys.buses[i].id != static_cast<int>(i)) {
            throw CaseError(pointer("/buses", i, "id"), "internal ids are not contiguous");
        }
    }
    for (std::size_t i = 0; i < sys.branches.size(); ++i) {
        const auto& br = sys.branches[i];
        if (br.from < 0 || br.from >= n || br.to < 0 || br.to >= n) {
            throw CaseError(pointer("/branches", i), "bus index out of range");
        }
        if (br.from == br.to) {
            throw CaseError(pointer("/branches", i), "branch connects a bus to itself");
        }
        if (br.r == 0.0 && br.x == 0.0) {
            throw CaseError(pointer("/branches", i), "series impedance is zero");
        }
        if (br.b < 0.0) {
            throw CaseError(pointer("/branches", i, "b_pu"), "line charging must be >= 0");
        }
        if (br.tap <= 0.0) {
            throw CaseError(pointer("/branches", i, "tap"), "tap ratio must be positive");
        }
    }
    if (sys.generators.empty()) {
        throw CaseError("/generators", "case needs at least one generator");
    }
    for (std::size_t i = 0; i < sys.generators.size(); ++i) {
        const auto& g = sys.generators[i];
        if (g.bus < 0 || g.bus >= n) {
            throw CaseError(pointer("/generators", i, "bus"), "bus index out of range");
        }
        if (!(g.m > 0.0)) {
            throw CaseError(pointer("/generators", i, "m"), "inertia must be positive");
        }
        if (g.d < 0.0) {
            throw CaseError(pointer("/generators", i, "d"), "damping must be >= 0");
        }
        if (!(g.xd_prime > 0.0)) {
            throw CaseError(pointer("/generators", i, "xd_prime_pu"),
                            "transient reactance must be positive");
        }
        if (!(g.v_set > 0.0)) {
            throw CaseError(pointer("/generators", i, "v_pu"), "voltage setpoint must be positive");
        }
        if (sys.buses[static_cast<std::size_t>(g.bus)].kind == BusKind::load) {
            throw CaseError(pointer("/generators", i, "bus"),
                            "generator attached to a bus of kind \"load\"");
        }
    }
    auto by_bus = sys.generators_by_bus();
    for (std::size_t i = 0; i < sys.buses.size(); ++i) {
        if (sys.buses[i].kind != BusKind::load && by_bus[i].empty()) {
            throw CaseError(pointer("/buses", i, "kind"),
                            "bus declared as generator terminal has no generator");
        }
    }
    if (sys.slack_bus < 0 || sys.slack_bus >= n || by_bus[static_cast<std::size_t>(sys.slack_bus)].empty()) {
        throw CaseError("/slack_bus", "slack bus must carry a generator");
    }

    // Connectivity over in-service branches.
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    for (const auto& br : sys.branches) {
        if (br.in_service) {
            adj[static_cast<std::size_t>(br.from)].push_back(br.to);
            adj[static_cast<std::size_t>(br.to)].push_back(br.from);
        }
    }
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::queue<int> frontier;
    frontier.push(0);
    seen[0] = 1;
    int reached = 1;
    while (!frontier.empty()) {
        int u = frontier.front();
        frontier.pop();
        for (int v : adj[static_cast<std::size_t>(u)]) {
            if (!seen[static_cast<std::size_t>(v)]) {
                seen[static_cast<std::size_t>(v)] = 1;
                ++reached;
                frontier.push(v);
            }
        }
    }
    if (reached != n) {
        for (std::size_t i = 0; i < seen.size(); ++i) {
            if (!seen[i]) {
                throw CaseError("/buses", "network is disconnected: bus " +
                                              std::to_string(sys.buses[i].external_id) +
                                              " is unreachable from bus " +
                                              std::to_string(sys.buses[0].external_id));
            }
        }
    }
}

std::vector<PhysicalLoad> physical_loads(const PowerSystemCase& sys) {
    std::vector<PhysicalLoad> out;
    out.reserve(sys.buses.size());
    for (const auto& bus : sys.buses) {
        out.push_back({bus.external_id, bus.load_p * sys.mva_base, bus.load_q * sys.mva_base});
    }
    return out;
}

}  // namespace v2gsim
