#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace v2gsim {

enum class BusKind { generator, load, both };

[[nodiscard]] std::string_view to_string(BusKind kind);

/// Network node. `id` is the dense internal index; `external_id` is the
/// number used in the case file and on the command line.
struct Bus {
    int id = 0;
    int external_id = 0;
    BusKind kind = BusKind::load;
    double base_kv = 1.0;
    double load_p = 0.0;  // pu on system base
    double load_q = 0.0;  // pu on system base
};

/// Transmission line or transformer, pi-equivalent. All values per-unit.
/// `tap` is the off-nominal ratio at the `from` side.
struct Branch {
    int from = 0;
    int to = 0;
    double r = 0.0;
    double x = 0.0;
    double b = 0.0;
    double tap = 1.0;
    bool in_service = true;
};

/// Classical machine: constant EMF behind transient reactance.
struct Generator {
    int bus = 0;
    double m = 0.0;         // inertia, pu*s^2/rad
    double d = 0.0;         // damping, pu*s/rad
    double xd_prime = 0.0;  // pu
    double p_sched = 0.0;   // scheduled output for the power flow, pu
    double v_set = 1.0;     // terminal voltage setpoint, pu
};

struct PowerSystemCase {
    std::string name;
    double mva_base = 100.0;
    double frequency_hz = 50.0;
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<Generator> generators;
    int slack_bus = 0;

    [[nodiscard]] int bus_count() const { return static_cast<int>(buses.size()); }
    [[nodiscard]] int generator_count() const { return static_cast<int>(generators.size()); }

    /// Internal index of a bus given its case-file number.
    [[nodiscard]] std::optional<int> bus_index(int external_id) const;
    /// Index of the in-service branch joining two case-file bus numbers (either direction).
    [[nodiscard]] std::optional<int> branch_index(int from_external, int to_external) const;

    [[nodiscard]] double total_load_mw() const;
    /// Generator indices attached to each bus.
    [[nodiscard]] std::vector<std::vector<int>> generators_by_bus() const;
};

/// Malformed case text. Carries a location: either line/column for syntax
/// errors or a JSON pointer to the offending field.
class CaseError : public std::runtime_error {
public:
    CaseError(std::string location, const std::string& message)
        : std::runtime_error(location + ": " + message), location_(std::move(location)) {}

    [[nodiscard]] const std::string& location() const { return location_; }

private:
    std::string location_;
};

/// Parses a case file (JSON schema documented in docs/formats.md). Loads are
/// converted from MW/MVAr to per-unit and bus numbers are mapped to 0..N-1.
[[nodiscard]] PowerSystemCase parse_case(std::string_view text);
[[nodiscard]] PowerSystemCase load_case_file(const std::string& path);

/// Checks every structural invariant; throws CaseError on the first violation.
void validate_case(const PowerSystemCase& sys);

/// Physical-unit view of the per-unit loads, used for the per-unit round trip
/// and for reports.
struct PhysicalLoad {
    int external_id = 0;
    double load_mw = 0.0;
    double load_mvar = 0.0;
};
[[nodiscard]] std::vector<PhysicalLoad> physical_loads(const PowerSystemCase& sys);

}  // namespace v2gsim
