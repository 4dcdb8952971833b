#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "v2gsim/dynamic_model.hpp"

namespace v2gsim {

struct NetworkOptions {
    double tolerance = 1e-10;  // max |dP|,|dQ| per bus, pu
    int max_iterations = 20;
    /// Below this voltage a PEV group behaves as a constant admittance sized to
    /// its scheduled power at the breakpoint, so that a bolted fault on a
    /// PEV-equipped bus stays solvable.
    double pevg_breakpoint_v = 0.7;
};

class NetworkSolveError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct NetworkSolution {
    Eigen::VectorXcd v;   // bus voltage phasors
    Eigen::VectorXd pe;   // electrical power per machine, pu
    int iterations = 0;
    double residual = 0.0;
};

/// Algebraic part of the model for one network topology: solves the load-bus
/// balance for the bus voltages given the machine rotor angles and the PEV
/// group powers, and evaluates the machine electrical powers.
///
/// The linear part (network, load admittances, machine reactances) is
/// factorised once; PEV powers are handled by chord iterations on that
/// factorisation, falling back to full Newton when those stall.
class NetworkSolver {
public:
    NetworkSolver(const DynamicModel& model, std::span<const TopologyMod> mods = {},
                  NetworkOptions options = {});

    /// `v` holds the initial guess on entry and the solution on exit.
    /// `pevg` is per bus, pu, positive = consumption. Throws NetworkSolveError.
    void solve(std::span<const double> delta, std::span<const double> pevg, Eigen::VectorXcd& v,
               Eigen::VectorXd& pe, int* iterations = nullptr) const;

    [[nodiscard]] NetworkSolution solve(std::span<const double> delta,
                                        std::span<const double> pevg,
                                        const Eigen::VectorXcd& guess) const;

    /// Complex power mismatch V_i * conj(F_i(V)) at every bus.
    [[nodiscard]] Eigen::VectorXcd power_mismatch(std::span<const double> delta,
                                                  std::span<const double> pevg,
                                                  const Eigen::VectorXcd& v) const;

    /// d(theta_i)/d(P_j) for every bus i and each bus j in `columns`, about the
    /// voltages `v`. PEV power enters as a current perturbation on the linear
    /// network; its own voltage dependence is left out.
    [[nodiscard]] Eigen::MatrixXd angle_sensitivity(const Eigen::VectorXcd& v,
                                                    std::span<const int> columns) const;

    [[nodiscard]] const Eigen::MatrixXcd& load_network() const { return y_load_; }
    [[nodiscard]] const NetworkOptions& options() const { return options_; }

private:
    void current_mismatch(std::span<const double> delta, std::span<const double> pevg,
                          const Eigen::VectorXcd& v, Eigen::VectorXcd& f) const;
    void machine_powers(std::span<const double> delta, const Eigen::VectorXcd& v,
                        Eigen::VectorXd& pe) const;
    bool newton(std::span<const double> delta, std::span<const double> pevg, Eigen::VectorXcd& v,
                int& iterations) const;

    const DynamicModel* model_;
    NetworkOptions options_;
    Eigen::MatrixXcd y_load_;  // network + load admittances + machine admittances
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu_;
    std::vector<int> terminal_;       // terminal bus per machine
    std::vector<Complex> machine_y_;  // 1/(j xd') per machine
};

/// Swing-equation right-hand side: returns d(omega)/dt per machine;
/// d(delta)/dt is omega itself.
[[nodiscard]] Eigen::VectorXd swing_rhs(const DynamicModel& model, const Eigen::VectorXd& omega,
                                        const Eigen::VectorXd& pe);

}  // namespace v2gsim
