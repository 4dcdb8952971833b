#pragma once

#include <iosfwd>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "v2gsim/case.hpp"

namespace v2gsim {

struct PowerFlowOptions {
    double tolerance = 1e-8;  // max |P|,|Q| mismatch, pu
    int max_iterations = 50;
};

struct PowerFlowSolution {
    Eigen::VectorXd v;       // per bus, pu
    Eigen::VectorXd theta;   // per bus, rad; slack = 0
    std::vector<double> p_gen;  // per generator, pu
    std::vector<double> q_gen;  // per generator, pu
    double mismatch_norm = 0.0;
    int iterations = 0;
};

class PowerFlowError : public std::runtime_error {
public:
    PowerFlowError(const std::string& message, double mismatch, int iterations)
        : std::runtime_error(message), mismatch_(mismatch), iterations_(iterations) {}

    [[nodiscard]] double mismatch() const { return mismatch_; }
    [[nodiscard]] int iterations() const { return iterations_; }

private:
    double mismatch_;
    int iterations_;
};

/// Full Newton-Raphson in polar coordinates from a flat start. Generator buses
/// are PV at their setpoint (no reactive limits), the slack bus is the angle
/// reference, loads are constant power.
[[nodiscard]] PowerFlowSolution solve_power_flow(const PowerSystemCase& sys,
                                                 const PowerFlowOptions& options = {});

/// Net complex injection at every bus for a given voltage profile.
[[nodiscard]] Eigen::VectorXcd bus_injections(const Eigen::MatrixXcd& ybus,
                                              const Eigen::VectorXd& v,
                                              const Eigen::VectorXd& theta);

/// Per-bus CSV: bus, v_pu, theta_rad, p_inj_mw, q_inj_mvar, load_mw, load_mvar.
void write_power_flow_csv(std::ostream& os, const PowerSystemCase& sys,
                          const PowerFlowSolution& pf);

}  // namespace v2gsim
