#include "v2gsim/power_flow.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "v2gsim/ybus.hpp"

namespace v2gsim {

Eigen::VectorXcd bus_injections(const Eigen::MatrixXcd& ybus, const Eigen::VectorXd& v,
                                const Eigen::VectorXd& theta) {
    const auto n = v.size();
    Eigen::VectorXcd vc(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        vc(i) = std::polar(v(i), theta(i));
    }
    Eigen::VectorXcd current = ybus * vc;
    return vc.cwiseProduct(current.conjugate());
}

PowerFlowSolution solve_power_flow(const PowerSystemCase& sys, const PowerFlowOptions& options) {
    const int n = sys.bus_count();
    const Eigen::MatrixXcd y = build_ybus(sys).y;
    const Eigen::MatrixXd g = y.real();
    const Eigen::MatrixXd b = y.imag();
    const auto by_bus = sys.generators_by_bus();

    enum class Type { pq, pv, slack };
    std::vector<Type> type(static_cast<std::size_t>(n), Type::pq);
    Eigen::VectorXd p_spec = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd q_spec = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
        const auto& bus = sys.buses[static_cast<std::size_t>(i)];
        p_spec(i) = -bus.load_p;
        q_spec(i) = -bus.load_q;
        const auto& gens = by_bus[static_cast<std::size_t>(i)];
        if (!gens.empty()) {
            type[static_cast<std::size_t>(i)] = Type::pv;
            v(i) = sys.generators[static_cast<std::size_t>(gens.front())].v_set;
            for (int gi : gens) {
                p_spec(i) += sys.generators[static_cast<std::size_t>(gi)].p_sched;
            }
        }
    }
    type[static_cast<std::size_t>(sys.slack_bus)] = Type::slack;

    // Unknown ordering: theta of every non-slack bus, then V of every PQ bus.
    std::vector<int> angle_idx;
    std::vector<int> mag_idx;
    for (int i = 0; i < n; ++i) {
        if (type[static_cast<std::size_t>(i)] != Type::slack) {
            angle_idx.push_back(i);
        }
        if (type[static_cast<std::size_t>(i)] == Type::pq) {
            mag_idx.push_back(i);
        }
    }
    const int na = static_cast<int>(angle_idx.size());
    const int nm = static_cast<int>(mag_idx.size());
    const int dim = na + nm;

    Eigen::VectorXd p_calc(n);
    Eigen::VectorXd q_calc(n);
    auto evaluate = [&]() {
        Eigen::VectorXcd s = bus_injections(y, v, theta);
        p_calc = s.real();
        q_calc = s.imag();
    };
    auto mismatch = [&](Eigen::VectorXd& f) {
        f.resize(dim);
        for (int a = 0; a < na; ++a) {
            int i = angle_idx[static_cast<std::size_t>(a)];
            f(a) = p_spec(i) - p_calc(i);
        }
        for (int m = 0; m < nm; ++m) {
            int i = mag_idx[static_cast<std::size_t>(m)];
            f(na + m) = q_spec(i) - q_calc(i);
        }
        return dim == 0 ? 0.0 : f.cwiseAbs().maxCoeff();
    };

    PowerFlowSolution out;
    Eigen::VectorXd f;
    evaluate();
    double norm = mismatch(f);
    int iter = 0;
    while (norm >= options.tolerance) {
        if (iter >= options.max_iterations) {
            std::ostringstream os;
            os << "power flow did not converge after " << iter << " iterations (mismatch "
               << norm << " pu)";
            throw PowerFlowError(os.str(), norm, iter);
        }
        Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(dim, dim);
        // Rows: dP (angle_idx), dQ (mag_idx). Columns: dtheta (angle_idx), dV (mag_idx).
        std::vector<int> col_of_angle(static_cast<std::size_t>(n), -1);
        std::vector<int> col_of_mag(static_cast<std::size_t>(n), -1);
        for (int a = 0; a < na; ++a) {
            col_of_angle[static_cast<std::size_t>(angle_idx[static_cast<std::size_t>(a)])] = a;
        }
        for (int m = 0; m < nm; ++m) {
            col_of_mag[static_cast<std::size_t>(mag_idx[static_cast<std::size_t>(m)])] = na + m;
        }
        auto fill_row = [&](int row, int i, bool active) {
            for (int k = 0; k < n; ++k) {
                double t = theta(i) - theta(k);
                double c = std::cos(t);
                double s = std::sin(t);
                int ca = col_of_angle[static_cast<std::size_t>(k)];
                int cm = col_of_mag[static_cast<std::size_t>(k)];
                double d_theta;
                double d_v;
                if (k == i) {
                    if (active) {
                        d_theta = -q_calc(i) - b(i, i) * v(i) * v(i);
                        d_v = p_calc(i) / v(i) + g(i, i) * v(i);
                    } else {
                        d_theta = p_calc(i) - g(i, i) * v(i) * v(i);
                        d_v = q_calc(i) / v(i) - b(i, i) * v(i);
                    }
                } else {
                    if (active) {
                        d_theta = v(i) * v(k) * (g(i, k) * s - b(i, k) * c);
                        d_v = v(i) * (g(i, k) * c + b(i, k) * s);
                    } else {
                        d_theta = -v(i) * v(k) * (g(i, k) * c + b(i, k) * s);
                        d_v = v(i) * (g(i, k) * s - b(i, k) * c);
                    }
                }
                if (ca >= 0) {
                    jac(row, ca) = d_theta;
                }
                if (cm >= 0) {
                    jac(row, cm) = d_v;
                }
            }
        };
        for (int a = 0; a < na; ++a) {
            fill_row(a, angle_idx[static_cast<std::size_t>(a)], true);
        }
        for (int m = 0; m < nm; ++m) {
            fill_row(na + m, mag_idx[static_cast<std::size_t>(m)], false);
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
        if (!lu.isInvertible()) {
            throw PowerFlowError("power flow Jacobian is singular", norm, iter);
        }
        Eigen::VectorXd dx = lu.solve(f);
        for (int a = 0; a < na; ++a) {
            theta(angle_idx[static_cast<std::size_t>(a)]) += dx(a);
        }
        for (int m = 0; m < nm; ++m) {
            v(mag_idx[static_cast<std::size_t>(m)]) += dx(na + m);
        }
        ++iter;
        evaluate();
        norm = mismatch(f);
        if (!std::isfinite(norm)) {
            throw PowerFlowError("power flow diverged", norm, iter);
        }
    }

    out.v = v;
    out.theta = theta;
    out.mismatch_norm = norm;
    out.iterations = iter;
    out.p_gen.assign(sys.generators.size(), 0.0);
    out.q_gen.assign(sys.generators.size(), 0.0);
    for (int i = 0; i < n; ++i) {
        const auto& gens = by_bus[static_cast<std::size_t>(i)];
        if (gens.empty()) {
            continue;
        }
        const auto& bus = sys.buses[static_cast<std::size_t>(i)];
        double p_bus = p_calc(i) + bus.load_p;
        double q_bus = q_calc(i) + bus.load_q;
        // Scheduled P for all but the first machine; the first absorbs the
        // remainder (only matters at the slack bus). Q is shared equally.
        double p_rest = 0.0;
        for (std::size_t k = 1; k < gens.size(); ++k) {
            auto gi = static_cast<std::size_t>(gens[k]);
            out.p_gen[gi] = sys.generators[gi].p_sched;
            p_rest += out.p_gen[gi];
        }
        out.p_gen[static_cast<std::size_t>(gens.front())] = p_bus - p_rest;
        for (int gi : gens) {
            out.q_gen[static_cast<std::size_t>(gi)] = q_bus / static_cast<double>(gens.size());
        }
    }
    return out;
}

void write_power_flow_csv(std::ostream& os, const PowerSystemCase& sys,
                          const PowerFlowSolution& pf) {
    const Eigen::MatrixXcd y = build_ybus(sys).y;
    Eigen::VectorXcd s = bus_injections(y, pf.v, pf.theta);
    os << "bus,v_pu,theta_rad,p_inj_mw,q_inj_mvar,load_mw,load_mvar\n";
    os << std::setprecision(12);
    for (const auto& bus : sys.buses) {
        os << bus.external_id << ',' << pf.v(bus.id) << ',' << pf.theta(bus.id) << ','
           << s(bus.id).real() * sys.mva_base << ',' << s(bus.id).imag() * sys.mva_base << ','
           << bus.load_p * sys.mva_base << ',' << bus.load_q * sys.mva_base << '\n';
    }
}

}  // namespace v2gsim
