#include "fixtures.hpp"

#include "v2gsim/control.hpp"
#include "v2gsim/stability.hpp"

#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

namespace v2gsim::testing {

std::string data_path(const std::string& file) { return std::string(V2GSIM_TEST_DATA_DIR) + "/" + file; }

PowerSystemCase load_bundled(const std::string& name) { return load_case_file(data_path(name + ".json")); }

std::shared_ptr<const DynamicModel> bundled_model(const std::string& name) {
    // Models are immutable; share them between tests in one binary.
    static std::mutex mu;
    static std::map<std::string, std::shared_ptr<const DynamicModel>> cache;
    std::lock_guard lock(mu);
    auto& slot = cache[name];
    if (!slot) {
        slot = prepare_model(load_bundled(name));
    }
    return slot;
}

PowerSystemCase smib_case(const SmibParams& p) {
    nlohmann::json j = {
        {"name", "smib"},
        {"system", {{"mva_base", 100.0}, {"frequency_hz", 60.0}}},
        {"slack_bus", 2},
        {"buses",
         {{{"id", 1}, {"kind", "generator"}}, {{"id", 2}, {"kind", "generator"}}}},
        {"branches", {{{"from", 1}, {"to", 2}, {"r_pu", 0.0}, {"x_pu", p.x_line}}}},
        {"generators",
         {{{"bus", 1}, {"m", p.m}, {"d", p.d}, {"xd_prime_pu", p.xd}, {"p_mw", p.p * 100.0},
           {"v_pu", p.v}},
          {{"bus", 2}, {"m", p.m_bus}, {"d", p.d / p.m * p.m_bus}, {"xd_prime_pu", p.xd_bus},
           {"v_pu", p.v}}}}};
    return parse_case(j.dump());
}

SmibOracle smib_oracle(const SmibParams& p) {
    using C = std::complex<double>;
    const C j(0.0, 1.0);
    // Terminal angle from the lossless transfer equation, bus 2 at angle 0.
    const double theta1 = std::asin(p.p * p.x_line / (p.v * p.v));
    const C v1 = std::polar(p.v, theta1);
    const C v2 = p.v;
    const C i12 = (v1 - v2) / (j * p.x_line);
    const C e1 = v1 + j * p.xd * i12;
    const C e2 = v2 - j * p.xd_bus * i12;

    SmibOracle o;
    o.e1 = std::abs(e1);
    o.e2 = std::abs(e2);
    o.delta0 = std::arg(e1) - std::arg(e2);
    o.x_total = p.xd + p.x_line + p.xd_bus;
    o.p_max = o.e1 * o.e2 / o.x_total;
    o.k = o.p_max * std::cos(o.delta0);
    o.m_reduced = p.m * p.m_bus / (p.m + p.m_bus);
    return o;
}

double equal_area_cct(double m, double p_m, double p_max) {
    const double d0 = std::asin(p_m / p_max);
    const double dmax = std::numbers::pi - d0;
    // Accelerating area p_m*(dc - d0) equals decelerating area up to dmax.
    const double dc = std::acos((p_m * (dmax - d0)) / p_max + std::cos(dmax));
    // Free acceleration at p_m/m from rest.
    return std::sqrt(2.0 * m * (dc - d0) / p_m);
}

double linearization_mismatch(std::shared_ptr<const DynamicModel> model, double h_mw_per_hz) {
    Scenario sc;
    sc.control.h_mw_per_hz = h_mw_per_hz;
    sc.control.trigger_enabled = false;
    Simulator sim(model, sc);
    const int n = model->machine_count();
    const auto gains = control::allocate_gains(h_mw_per_hz, model->sys);
    const Eigen::MatrixXd freq_map = bus_frequency_map(*model);

    auto rhs = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd delta = x.head(n);
        Eigen::VectorXd omega = x.tail(n);
        Eigen::VectorXd bus_omega = freq_map * omega;
        std::vector<double> pevg(gains.size(), 0.0);
        for (std::size_t i = 0; i < gains.size(); ++i) {
            const double df = bus_omega(static_cast<Eigen::Index>(i)) / (2.0 * std::numbers::pi);
            pevg[i] = control::pevg_power_mw(df, gains[i]) / model->sys.mva_base;
        }
        return sim.stage_derivative(delta, omega, pevg);
    };

    Eigen::VectorXd x0(2 * n);
    x0 << sim.state().delta, sim.state().omega;
    const Eigen::MatrixXd a = linearize(*model, h_mw_per_hz).a;
    double worst = 0.0;
    for (int j = 0; j < 2 * n; ++j) {
        const double eps = 1e-5 * std::max(1.0, std::abs(x0(j)));
        Eigen::VectorXd xp = x0;
        Eigen::VectorXd xm = x0;
        xp(j) += eps;
        xm(j) -= eps;
        const Eigen::VectorXd fd = (rhs(xp) - rhs(xm)) / (2.0 * eps);
        const double scale = std::max(fd.cwiseAbs().maxCoeff(), 1e-12);
        worst = std::max(worst, (a.col(j) - fd).cwiseAbs().maxCoeff() / scale);
    }
    return worst;
}

std::vector<Peak> peaks(const std::vector<double>& t, const std::vector<double>& y) {
    std::vector<Peak> out;
    for (std::size_t k = 1; k + 1 < y.size(); ++k) {
        if (y[k] > y[k - 1] && y[k] >= y[k + 1]) {
            const double a = y[k - 1];
            const double b = y[k];
            const double c = y[k + 1];
            const double denom = a - 2.0 * b + c;
            const double s = denom != 0.0 ? 0.5 * (a - c) / denom : 0.0;
            const double h = t[k + 1] - t[k];
            out.push_back({t[k] + s * h, b - 0.25 * (a - c) * s});
        }
    }
    return out;
}

double log_slope(const std::vector<Peak>& p) {
    double st = 0.0;
    double sy = 0.0;
    double stt = 0.0;
    double sty = 0.0;
    const double n = static_cast<double>(p.size());
    for (const auto& pk : p) {
        const double ly = std::log(pk.y);
        st += pk.t;
        sy += ly;
        stt += pk.t * pk.t;
        sty += pk.t * ly;
    }
    return (n * sty - st * sy) / (n * stt - st * st);
}

}  // namespace v2gsim::testing
