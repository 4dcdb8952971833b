#pragma once

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "v2gsim/case.hpp"

namespace v2gsim {

using Complex = std::complex<double>;

/// Shunt admittance placed on a bus diagonal to represent a bolted
/// three-phase fault.
inline constexpr double kFaultAdmittance = 1e7;

struct TopologyMod {
    enum class Kind { branch_out, bus_fault };
    Kind kind = Kind::branch_out;
    int index = 0;  // branch index or bus index, depending on kind

    static TopologyMod branch_out(int branch) { return {Kind::branch_out, branch}; }
    static TopologyMod bus_fault(int bus) { return {Kind::bus_fault, bus}; }
};

/// Dense complex nodal admittance matrix.
struct AdmittanceMatrix {
    Eigen::MatrixXcd y;

    [[nodiscard]] int order() const { return static_cast<int>(y.rows()); }
    [[nodiscard]] Complex operator()(int i, int k) const { return y(i, k); }
};

/// Pi-model assembly of the in-service branches, with the given
/// modifications applied. Generator reactances are not included.
[[nodiscard]] AdmittanceMatrix build_ybus(const PowerSystemCase& sys,
                                          std::span<const TopologyMod> mods = {});

struct PowerFlowSolution;

/// Constant-admittance load model frozen at the pre-disturbance voltage:
/// G0 = P/V^2, B0 = Q/V^2 (both positive for a consuming load).
struct LoadAdmittance {
    int bus = 0;
    double g0 = 0.0;
    double b0 = 0.0;
};

/// One entry per bus, in bus order. Throws if a loaded bus sits below 0.5 pu.
[[nodiscard]] std::vector<LoadAdmittance> loads_to_admittance(const PowerSystemCase& sys,
                                                              const PowerFlowSolution& pf);

}  // namespace v2gsim
