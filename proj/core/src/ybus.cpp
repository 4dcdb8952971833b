#include "v2gsim/ybus.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "v2gsim/power_flow.hpp"

namespace v2gsim {

AdmittanceMatrix build_ybus(const PowerSystemCase& sys, std::span<const TopologyMod> mods) {
    const int n = sys.bus_count();
    std::vector<char> removed(sys.branches.size(), 0);
    std::vector<int> faulted;
    for (const auto& mod : mods) {
        switch (mod.kind) {
        case TopologyMod::Kind::branch_out:
            if (mod.index < 0 || mod.index >= static_cast<int>(sys.branches.size())) {
                throw std::out_of_range("branch-out modification references branch " +
                                        std::to_string(mod.index));
            }
            removed[static_cast<std::size_t>(mod.index)] = 1;
            break;
        case TopologyMod::Kind::bus_fault:
            if (mod.index < 0 || mod.index >= n) {
                throw std::out_of_range("bus fault references bus " + std::to_string(mod.index));
            }
            faulted.push_back(mod.index);
            break;
        }
    }

    AdmittanceMatrix out{Eigen::MatrixXcd::Zero(n, n)};
    auto& y = out.y;
    for (std::size_t k = 0; k < sys.branches.size(); ++k) {
        const auto& br = sys.branches[k];
        if (!br.in_service || removed[k]) {
            continue;
        }
        Complex z(br.r, br.x);
        if (std::abs(z) == 0.0) {
            throw std::invalid_argument("branch " + std::to_string(k) + " has zero impedance");
        }
        Complex ys = 1.0 / z;
        Complex half_charging(0.0, br.b / 2.0);
        double t = br.tap;
        y(br.from, br.from) += (ys + half_charging) / (t * t);
        y(br.to, br.to) += ys + half_charging;
        y(br.from, br.to) -= ys / t;
        y(br.to, br.from) -= ys / t;
    }
    for (int bus : faulted) {
        y(bus, bus) += kFaultAdmittance;
    }
    return out;
}

std::vector<LoadAdmittance> loads_to_admittance(const PowerSystemCase& sys,
                                                const PowerFlowSolution& pf) {
    std::vector<LoadAdmittance> out;
    out.reserve(sys.buses.size());
    for (const auto& bus : sys.buses) {
        double v = pf.v(bus.id);
        LoadAdmittance la{bus.id, 0.0, 0.0};
        if (bus.load_p != 0.0 || bus.load_q != 0.0) {
            if (v < 0.5) {
                std::ostringstream os;
                os << "bus " << bus.external_id << " initial voltage " << v
                   << " pu is below 0.5 pu; check the case data";
                throw std::domain_error(os.str());
            }
            la.g0 = bus.load_p / (v * v);
            la.b0 = bus.load_q / (v * v);
        }
        out.push_back(la);
    }
    return out;
}

}  // namespace v2gsim
