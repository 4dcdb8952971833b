#pragma once

#include <memory>
#include <string>
#include <vector>

#include "v2gsim/case.hpp"
#include "v2gsim/dynamic_model.hpp"
#include "v2gsim/simulator.hpp"

namespace v2gsim::testing {

std::string data_path(const std::string& file);
PowerSystemCase load_bundled(const std::string& name);  // "case3" or "case39"
std::shared_ptr<const DynamicModel> bundled_model(const std::string& name);

// Machine 1 at bus 1 feeds an "infinite" bus 2: machine 2 with a huge
// inertia and a vanishing reactance. Lossless line, no loads.
struct SmibParams {
    double p = 0.8;         // pu delivered by machine 1
    double x_line = 0.2;
    double xd = 0.3;
    double m = 0.1;
    double d = 0.0;
    double m_bus = 1e7;     // inertia of the stiff machine
    double xd_bus = 1e-3;
    double v = 1.0;         // both terminal setpoints
};

PowerSystemCase smib_case(const SmibParams& p);

// Closed-form operating point of the SMIB above, computed from phasors only.
struct SmibOracle {
    double e1 = 0.0;
    double e2 = 0.0;
    double delta0 = 0.0;   // rotor angle difference
    double x_total = 0.0;
    double p_max = 0.0;    // e1*e2/x_total
    double k = 0.0;        // synchronising coefficient p_max*cos(delta0)
    double m_reduced = 0.0;
};

SmibOracle smib_oracle(const SmibParams& p);

// Equal-area critical clearing time for a bolted fault that removes all
// transfer (Pe = 0 while on) and a post-fault network identical to pre-fault.
double equal_area_cct(double m, double p_m, double p_max);

// Largest column-wise relative difference between linearize() and a central
// difference of Simulator::stage_derivative, with the PEV powers set by the
// droop acting on the quasi-static bus frequencies.
double linearization_mismatch(std::shared_ptr<const DynamicModel> model, double h_mw_per_hz);

// Local maxima of y(t) refined with a parabola through the neighbours.
struct Peak {
    double t;
    double y;
};
std::vector<Peak> peaks(const std::vector<double>& t, const std::vector<double>& y);

// Least-squares slope of log(y) against t.
double log_slope(const std::vector<Peak>& p);

}  // namespace v2gsim::testing
