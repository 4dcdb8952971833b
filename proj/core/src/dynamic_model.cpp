#include "v2gsim/dynamic_model.hpp"

#include <numeric>

#include "v2gsim/network.hpp"

namespace v2gsim {

double DynamicModel::total_inertia() const {
    double total = 0.0;
    for (const auto& g : sys.generators) {
        total += g.m;
    }
    return total;
}

AdmittanceMatrix augment_with_machines(const PowerSystemCase& sys, const AdmittanceMatrix& network) {
    const int n_bus = sys.bus_count();
    const int n_gen = sys.generator_count();
    AdmittanceMatrix out{Eigen::MatrixXcd::Zero(n_bus + n_gen, n_bus + n_gen)};
    out.y.topLeftCorner(n_bus, n_bus) = network.y;
    for (int g = 0; g < n_gen; ++g) {
        const auto& gen = sys.generators[static_cast<std::size_t>(g)];
        Complex yg = 1.0 / Complex(0.0, gen.xd_prime);
        int t = gen.bus;
        int k = n_bus + g;
        out.y(t, t) += yg;
        out.y(k, k) += yg;
        out.y(t, k) -= yg;
        out.y(k, t) -= yg;
    }
    return out;
}

DynamicModel init_dynamics(const PowerSystemCase& sys, const PowerFlowSolution& pf) {
    if (pf.v.size() != sys.bus_count() ||
        pf.p_gen.size() != sys.generators.size()) {
        throw std::invalid_argument("power-flow solution does not match the case");
    }
    DynamicModel model;
    model.sys = sys;
    model.pf = pf;
    model.loads = loads_to_admittance(sys, pf);
    model.augmented = augment_with_machines(sys, build_ybus(sys));

    model.machines.resize(sys.generators.size());
    for (std::size_t g = 0; g < sys.generators.size(); ++g) {
        const auto& gen = sys.generators[g];
        Complex vt = std::polar(pf.v(gen.bus), pf.theta(gen.bus));
        Complex current = std::conj(Complex(pf.p_gen[g], pf.q_gen[g]) / vt);
        Complex emf = vt + Complex(0.0, gen.xd_prime) * current;
        model.machines[g].e = std::abs(emf);
        model.machines[g].delta0 = std::arg(emf);
        model.machines[g].p_m = pf.p_gen[g];
    }

    // Take the mechanical power from the dynamic network itself so that the
    // initial state is an equilibrium to round-off, not just to the power-flow
    // tolerance.
    NetworkSolver solver(model);
    std::vector<double> delta(model.machines.size());
    for (std::size_t g = 0; g < delta.size(); ++g) {
        delta[g] = model.machines[g].delta0;
    }
    std::vector<double> no_pevg(static_cast<std::size_t>(sys.bus_count()), 0.0);
    Eigen::VectorXcd v(sys.bus_count());
    for (int i = 0; i < sys.bus_count(); ++i) {
        v(i) = std::polar(pf.v(i), pf.theta(i));
    }
    Eigen::VectorXd pe;
    solver.solve(delta, no_pevg, v, pe);
    for (std::size_t g = 0; g < model.machines.size(); ++g) {
        model.machines[g].p_m = pe(static_cast<Eigen::Index>(g));
    }
    return model;
}

std::shared_ptr<const DynamicModel> prepare_model(const PowerSystemCase& sys,
                                                  const PowerFlowOptions& pf_options) {
    auto pf = solve_power_flow(sys, pf_options);
    return std::make_shared<const DynamicModel>(init_dynamics(sys, pf));
}

}  // namespace v2gsim
