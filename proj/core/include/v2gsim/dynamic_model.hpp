#pragma once

#include <memory>
#include <vector>

#include "v2gsim/case.hpp"
#include "v2gsim/power_flow.hpp"
#include "v2gsim/ybus.hpp"

namespace v2gsim {

/// Frozen machine quantities for a dynamic run.
struct MachineInit {
    double e = 0.0;       // internal EMF magnitude, pu
    double delta0 = 0.0;  // initial rotor angle, rad
    double p_m = 0.0;     // mechanical power, pu
};

/// Everything a dynamic simulation needs besides the scenario: the case, its
/// pre-disturbance operating point, the machine constants derived from it and
/// the load admittances.
struct DynamicModel {
    PowerSystemCase sys;
    PowerFlowSolution pf;
    std::vector<MachineInit> machines;
    std::vector<LoadAdmittance> loads;  // one per bus
    /// Order N + n: network buses first, then one internal node per machine
    /// joined to its terminal through j*xd_prime. Loads are not included.
    AdmittanceMatrix augmented;

    [[nodiscard]] int bus_count() const { return sys.bus_count(); }
    [[nodiscard]] int machine_count() const { return sys.generator_count(); }
    [[nodiscard]] double total_inertia() const;
};

/// Builds the augmented admittance matrix for the given network topology.
[[nodiscard]] AdmittanceMatrix augment_with_machines(const PowerSystemCase& sys,
                                                     const AdmittanceMatrix& network);

/// Internal EMFs from the power-flow terminal currents, mechanical powers from
/// the equilibrium condition, and the frozen load admittances.
[[nodiscard]] DynamicModel init_dynamics(const PowerSystemCase& sys, const PowerFlowSolution& pf);

/// Power flow followed by init_dynamics.
[[nodiscard]] std::shared_ptr<const DynamicModel> prepare_model(const PowerSystemCase& sys,
                                                                const PowerFlowOptions& pf_options = {});

}  // namespace v2gsim
