#include "v2gsim/network.hpp"

#include <cmath>
#include <sstream>

namespace v2gsim {

NetworkSolver::NetworkSolver(const DynamicModel& model, std::span<const TopologyMod> mods,
                             NetworkOptions options)
    : model_(&model), options_(options) {
    const auto& sys = model.sys;
    y_load_ = build_ybus(sys, mods).y;
    for (const auto& load : model.loads) {
        // A consuming load draws P + jQ = |V|^2 (G0 - jB0)^*, i.e. admittance G0 - jB0.
        y_load_(load.bus, load.bus) += Complex(load.g0, -load.b0);
    }
    terminal_.reserve(sys.generators.size());
    machine_y_.reserve(sys.generators.size());
    for (const auto& gen : sys.generators) {
        Complex yg = 1.0 / Complex(0.0, gen.xd_prime);
        terminal_.push_back(gen.bus);
        machine_y_.push_back(yg);
        y_load_(gen.bus, gen.bus) += yg;
    }
    lu_.compute(y_load_);
}

void NetworkSolver::current_mismatch(std::span<const double> delta, std::span<const double> pevg,
                                     const Eigen::VectorXcd& v, Eigen::VectorXcd& f) const {
    f.noalias() = y_load_ * v;
    for (std::size_t g = 0; g < terminal_.size(); ++g) {
        Complex emf = std::polar(model_->machines[g].e, delta[g]);
        f(terminal_[g]) -= machine_y_[g] * emf;
    }
    const double vb2 = options_.pevg_breakpoint_v * options_.pevg_breakpoint_v;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        double p = pevg[static_cast<std::size_t>(i)];
        if (p == 0.0) {
            continue;
        }
        double mag2 = std::norm(v(i));
        if (mag2 >= vb2) {
            f(i) += p / std::conj(v(i));
        } else {
            f(i) += p * v(i) / vb2;
        }
    }
}

Eigen::MatrixXd NetworkSolver::angle_sensitivity(const Eigen::VectorXcd& v,
                                                 std::span<const int> columns) const {
    const Eigen::Index n = v.size();
    const double vb2 = options_.pevg_breakpoint_v * options_.pevg_breakpoint_v;
    Eigen::MatrixXcd rhs = Eigen::MatrixXcd::Zero(n, static_cast<Eigen::Index>(columns.size()));
    for (std::size_t k = 0; k < columns.size(); ++k) {
        const int j = columns[k];
        // dI_j/dP_j for the two PEV load models, moved to the right-hand side.
        rhs(j, static_cast<Eigen::Index>(k)) =
            std::norm(v(j)) >= vb2 ? -1.0 / std::conj(v(j)) : -v(j) / vb2;
    }
    Eigen::MatrixXcd dv = lu_.solve(rhs);
    Eigen::MatrixXd out(n, dv.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        const Complex inv = std::abs(v(i)) > 1e-12 ? 1.0 / v(i) : Complex(0.0);
        for (Eigen::Index k = 0; k < dv.cols(); ++k) {
            out(i, k) = (dv(i, k) * inv).imag();
        }
    }
    return out;
}

Eigen::VectorXcd NetworkSolver::power_mismatch(std::span<const double> delta,
                                               std::span<const double> pevg,
                                               const Eigen::VectorXcd& v) const {
    Eigen::VectorXcd f;
    current_mismatch(delta, pevg, v, f);
    return v.cwiseProduct(f.conjugate());
}

void NetworkSolver::machine_powers(std::span<const double> delta, const Eigen::VectorXcd& v,
                                   Eigen::VectorXd& pe) const {
    pe.resize(static_cast<Eigen::Index>(terminal_.size()));
    for (std::size_t g = 0; g < terminal_.size(); ++g) {
        Complex emf = std::polar(model_->machines[g].e, delta[g]);
        Complex current = machine_y_[g] * (emf - v(terminal_[g]));
        pe(static_cast<Eigen::Index>(g)) = (emf * std::conj(current)).real();
    }
}

namespace {

double max_power_mismatch(const Eigen::VectorXcd& v, const Eigen::VectorXcd& f) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        Complex s = v(i) * std::conj(f(i));
        worst = std::max({worst, std::abs(s.real()), std::abs(s.imag())});
    }
    return worst;
}

}  // namespace

bool NetworkSolver::newton(std::span<const double> delta, std::span<const double> pevg,
                           Eigen::VectorXcd& v, int& iterations) const {
    const Eigen::Index n = v.size();
    const double vb2 = options_.pevg_breakpoint_v * options_.pevg_breakpoint_v;
    Eigen::MatrixXd jac(2 * n, 2 * n);
    Eigen::VectorXd rhs(2 * n);
    Eigen::VectorXcd f;
    while (iterations < options_.max_iterations) {
        current_mismatch(delta, pevg, v, f);
        if (max_power_mismatch(v, f) < options_.tolerance) {
            return true;
        }
        // Real form of the complex-linear part [G -B; B G], plus the 2x2
        // blocks from the PEV current terms.
        jac.topLeftCorner(n, n) = y_load_.real();
        jac.topRightCorner(n, n) = -y_load_.imag();
        jac.bottomLeftCorner(n, n) = y_load_.imag();
        jac.bottomRightCorner(n, n) = y_load_.real();
        for (Eigen::Index i = 0; i < n; ++i) {
            double p = pevg[static_cast<std::size_t>(i)];
            if (p == 0.0) {
                continue;
            }
            double x = v(i).real();
            double y = v(i).imag();
            double mag2 = x * x + y * y;
            if (mag2 >= vb2) {
                double m4 = mag2 * mag2;
                jac(i, i) += p * (y * y - x * x) / m4;
                jac(i, n + i) += -2.0 * p * x * y / m4;
                jac(n + i, i) += -2.0 * p * x * y / m4;
                jac(n + i, n + i) += p * (x * x - y * y) / m4;
            } else {
                jac(i, i) += p / vb2;
                jac(n + i, n + i) += p / vb2;
            }
        }
        rhs.head(n) = f.real();
        rhs.tail(n) = f.imag();
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(jac);
        Eigen::VectorXd dx = lu.solve(rhs);
        if (!dx.allFinite()) {
            return false;
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            v(i) -= Complex(dx(i), dx(n + i));
        }
        ++iterations;
    }
    current_mismatch(delta, pevg, v, f);
    return max_power_mismatch(v, f) < options_.tolerance;
}

void NetworkSolver::solve(std::span<const double> delta, std::span<const double> pevg,
                          Eigen::VectorXcd& v, Eigen::VectorXd& pe, int* iterations) const {
    const Eigen::Index n = y_load_.rows();
    if (v.size() != n) {
        v = Eigen::VectorXcd::Ones(n);
    }
    bool any_pevg = false;
    for (double p : pevg) {
        any_pevg = any_pevg || p != 0.0;
    }

    int iter = 0;
    bool converged = false;
    Eigen::VectorXcd f;
    if (!any_pevg) {
        // Purely linear: one solve with the factorised matrix.
        Eigen::VectorXcd injection = Eigen::VectorXcd::Zero(n);
        for (std::size_t g = 0; g < terminal_.size(); ++g) {
            injection(terminal_[g]) += machine_y_[g] * std::polar(model_->machines[g].e, delta[g]);
        }
        v = lu_.solve(injection);
        iter = 1;
        current_mismatch(delta, pevg, v, f);
        converged = max_power_mismatch(v, f) < options_.tolerance;
    } else {
        double previous = std::numeric_limits<double>::infinity();
        for (; iter < options_.max_iterations; ++iter) {
            current_mismatch(delta, pevg, v, f);
            double r = max_power_mismatch(v, f);
            if (r < options_.tolerance) {
                converged = true;
                break;
            }
            if (!(r < 0.5 * previous) && iter > 1) {
                break;  // chord iteration stalled
            }
            previous = r;
            v -= lu_.solve(f);
        }
        if (!converged) {
            converged = newton(delta, pevg, v, iter);
        }
    }
    if (!converged || !v.allFinite()) {
        std::ostringstream os;
        os << "network solve did not converge in " << options_.max_iterations << " iterations";
        throw NetworkSolveError(os.str());
    }
    if (iterations != nullptr) {
        *iterations = iter;
    }
    machine_powers(delta, v, pe);
}

NetworkSolution NetworkSolver::solve(std::span<const double> delta, std::span<const double> pevg,
                                     const Eigen::VectorXcd& guess) const {
    NetworkSolution out;
    out.v = guess;
    solve(delta, pevg, out.v, out.pe, &out.iterations);
    Eigen::VectorXcd s = power_mismatch(delta, pevg, out.v);
    out.residual = std::max(s.real().cwiseAbs().maxCoeff(), s.imag().cwiseAbs().maxCoeff());
    return out;
}

Eigen::VectorXd swing_rhs(const DynamicModel& model, const Eigen::VectorXd& omega,
                          const Eigen::VectorXd& pe) {
    const auto n = omega.size();
    Eigen::VectorXd out(n);
    for (Eigen::Index g = 0; g < n; ++g) {
        const auto& gen = model.sys.generators[static_cast<std::size_t>(g)];
        out(g) = (-gen.d * omega(g) + model.machines[static_cast<std::size_t>(g)].p_m - pe(g)) / gen.m;
    }
    return out;
}

}  // namespace v2gsim
