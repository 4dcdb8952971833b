#include <cmath>
#include <limits>
#include <numbers>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "v2gsim/stability.hpp"

namespace v2gsim {
namespace {

using testing::bundled_model;
using testing::SmibParams;

TEST(Linearize, VelocityRowsAreExact) {
    for (const char* name : {"case3", "case39"}) {
        auto m = bundled_model(name);
        auto sm = linearize(*m, 0.3 * m->sys.total_load_mw());
        const int n = sm.machines;
        EXPECT_EQ(sm.a.topLeftCorner(n, n), Eigen::MatrixXd::Zero(n, n));
        EXPECT_EQ(sm.a.topRightCorner(n, n), Eigen::MatrixXd::Identity(n, n));
    }
}

TEST(Linearize, SmibClosedForm) {
    SmibParams p;
    auto m = prepare_model(testing::smib_case(p));
    auto o = testing::smib_oracle(p);
    auto sm = linearize(*m, 0.0);
    EXPECT_NEAR(sm.a(2, 0), -o.k / p.m, 1e-7 * o.k / p.m);
    EXPECT_NEAR(sm.a(2, 1), o.k / p.m, 1e-7 * o.k / p.m);
    EXPECT_NEAR(sm.a(2, 2), 0.0, 1e-9);

    double imag = 0.0;
    for (auto ev : alpha(sm).eigenvalues) {
        imag = std::max(imag, ev.imag());
    }
    const double omega_n = std::sqrt(o.k / o.m_reduced);
    EXPECT_NEAR(imag / omega_n, 1.0, 1e-6);
}

TEST(Linearize, MatchesSimulatorDerivative) {
    for (const char* name : {"case3", "case39"}) {
        auto m = bundled_model(name);
        for (double frac : {0.0, 0.4, 2.0}) {
            EXPECT_LT(testing::linearization_mismatch(m, frac * m->sys.total_load_mw()), 1e-4)
                << name << " h=" << frac;
        }
    }
}

TEST(FrequencyMap, RigidRotationMovesEveryBus) {
    auto m = bundled_model("case39");
    auto map = bus_frequency_map(*m);
    EXPECT_LT((map.rowwise().sum() - Eigen::VectorXd::Ones(39)).cwiseAbs().maxCoeff(), 1e-6);
    for (int g = 0; g < m->machine_count(); ++g) {
        const int bus = m->sys.generators[static_cast<std::size_t>(g)].bus;
        EXPECT_EQ(map(bus, g), 1.0);
    }
}

TEST(Alpha, TrivialSpectra) {
    StateMatrix sm;
    sm.a = Eigen::Vector2d(-1.0, -2.0).asDiagonal();
    EXPECT_DOUBLE_EQ(alpha(sm).alpha, -1.0);

    sm.a << 0.0, 0.0, 0.0, -0.5;
    auto r = alpha(sm);
    EXPECT_DOUBLE_EQ(r.alpha, -0.5);
    EXPECT_EQ(r.excluded, 1);
    EXPECT_EQ(r.eigenvalues.size(), 2u);
}

TEST(Alpha, SmibDampedOscillator) {
    SmibParams p;
    p.d = 0.02;
    auto m = prepare_model(testing::smib_case(p));
    const double expected = -p.d / (2.0 * p.m);
    EXPECT_NEAR(alpha(linearize(*m, 0.0)).alpha / expected, 1.0, 1e-6);
}

TEST(Alpha, SweepAgreesWithPointwiseCallsAndWorkers) {
    auto m = bundled_model("case3");
    const double scale = m->sys.total_load_mw();
    std::vector<double> grid{0.0, 0.1 * scale, 0.5 * scale, 8.0 * scale, 20.0 * scale};
    auto one = sweep_alpha(*m, grid, 1);
    auto two = sweep_alpha(*m, grid, 2);
    EXPECT_EQ(one.alpha, two.alpha);
    EXPECT_EQ(one.argmin, two.argmin);
    EXPECT_EQ(one.alpha[0], alpha(linearize(*m, 0.0)).alpha);
    EXPECT_EQ(one.argmin, 3);
    for (std::size_t k = 1; k < grid.size(); ++k) {
        EXPECT_LT(one.alpha[k], one.alpha[0]);
    }
}

TEST(Alpha, UniformDampingRatioSetsTheOpenLoopValue) {
    for (const char* name : {"case3", "case39"}) {
        auto m = bundled_model(name);
        const auto& g = m->sys.generators.front();
        EXPECT_NEAR(alpha(linearize(*m, 0.0)).alpha / (-g.d / (2.0 * g.m)), 1.0, 1e-6) << name;
    }
}

TEST(Alpha, TimeDomainDecayMatches) {
    // Excite the slowest mode and fit the envelope of a machine speed.
    auto m = bundled_model("case39");
    auto sm = linearize(*m, 0.0);
    auto a = alpha(sm);
    Eigen::EigenSolver<Eigen::MatrixXd> es(sm.a);
    int mode = -1;
    for (int k = 0; k < es.eigenvalues().size(); ++k) {
        const auto ev = es.eigenvalues()(k);
        if (std::abs(ev) > kZeroModeThreshold && ev.imag() > 0.0 &&
            std::abs(ev.real() - a.alpha) < 1e-9 &&
            (mode < 0 || ev.imag() < es.eigenvalues()(mode).imag())) {
            mode = k;
        }
    }
    ASSERT_GE(mode, 0);
    Eigen::VectorXd shape = es.eigenvectors().col(mode).real();
    const int n = sm.machines;
    shape *= 1e-4 / shape.head(n).cwiseAbs().maxCoeff();

    Scenario sc;
    sc.t_end = 20.0;
    sc.sample_interval = 1e-3;
    Simulator sim(m, sc);
    auto start = sim.initial_state();
    start.delta += shape.head(n);
    start.omega += shape.tail(n);
    auto trace = simulate(m, sc, start);

    int probe = 0;
    shape.tail(n).cwiseAbs().maxCoeff(&probe);
    std::vector<double> t;
    std::vector<double> y;
    for (const auto& s : trace.samples) {
        t.push_back(s.t);
        y.push_back(s.omega[static_cast<std::size_t>(probe)]);
    }
    auto pk = testing::peaks(t, y);
    ASSERT_GE(pk.size(), 5u);
    EXPECT_NEAR(testing::log_slope(pk) / a.alpha, 1.0, 0.1);
}

Trace synthetic_trace(double t_end, double last_event, double drift_rate) {
    Trace tr;
    tr.scenario.t_end = t_end;
    tr.last_event_time = last_event;
    tr.inertia = {1.0, 1.0};
    for (int k = 0; k <= static_cast<int>(t_end * 100); ++k) {
        TraceSample s;
        s.t = k * 0.01;
        s.delta = {0.0, drift_rate * s.t};
        s.omega = {0.0, drift_rate};
        s.df = {0.0};
        tr.samples.push_back(s);
    }
    return tr;
}

TEST(Classify, Examples) {
    Scenario sc;
    auto hold = simulate(bundled_model("case3"), sc);
    EXPECT_EQ(classify(hold), Verdict::stable);

    // Relative angle t, so 2*pi from the centre of inertia well before the end.
    EXPECT_EQ(classify(synthetic_trace(15.0, 1.0, 1.0)), Verdict::unstable);

    EXPECT_THROW((void)classify(synthetic_trace(5.0, 1.0, 0.0)), TraceTooShort);
    EXPECT_EQ(classify(synthetic_trace(11.0, 1.0, 0.0)), Verdict::stable);

    auto diverged = synthetic_trace(11.0, 1.0, 0.0);
    diverged.instability.kind = Instability::Kind::network_divergence;
    EXPECT_EQ(classify(diverged), Verdict::unstable);
}

TEST(Classify, FinalWindowFrequency) {
    auto tr = synthetic_trace(12.0, 1.0, 0.0);
    tr.samples.back().df = {0.5};
    EXPECT_EQ(classify(tr), Verdict::unstable);
    tr.samples.back().df = {0.49};
    EXPECT_EQ(classify(tr), Verdict::stable);
    tr.samples[200].df = {3.0};  // outside the final window
    EXPECT_EQ(classify(tr), Verdict::stable);
}

TEST(Cct, SmibMatchesEqualArea) {
    SmibParams p;
    auto model = prepare_model(testing::smib_case(p));
    auto o = testing::smib_oracle(p);
    CctOptions opt;
    opt.classify.final_df_limit = std::numeric_limits<double>::infinity();
    auto r = critical_clearing_time(model, 0, 0.0, opt);
    ASSERT_EQ(r.status, CctResult::Status::found) << r.message;
    EXPECT_NEAR(r.cct, testing::equal_area_cct(o.m_reduced, p.p, o.p_max), 2e-3);
}

TEST(Cct, BisectionIsSound) {
    auto model = bundled_model("case3");
    for (double frac : {0.0, 2.0}) {
        const double h = frac * model->sys.total_load_mw();
        CctOptions opt;
        opt.control.trigger_enabled = false;
        auto r = critical_clearing_time(model, 1, h, opt);
        ASSERT_EQ(r.status, CctResult::Status::found);
        EXPECT_EQ(fault_verdict(model, 1, r.cct, h, opt), Verdict::stable);
        EXPECT_EQ(fault_verdict(model, 1, r.cct + 2e-3, h, opt), Verdict::unstable);
    }
}

TEST(Cct, Sentinels) {
    auto model = bundled_model("case3");
    CctOptions opt;
    opt.bracket_max = 0.01;
    auto r = critical_clearing_time(model, 1, 0.0, opt);
    EXPECT_EQ(r.status, CctResult::Status::stable_at_max);
    EXPECT_EQ(r.cct, 0.01);

    opt = {};
    opt.classify.angle_limit = 0.0;  // nothing counts as stable
    r = critical_clearing_time(model, 1, 0.0, opt);
    EXPECT_EQ(r.status, CctResult::Status::unclearable);
    EXPECT_EQ(r.cct, 0.0);
}

TEST(Cct, TableIsIndependentOfWorkers) {
    auto model = bundled_model("case3");
    CctOptions opt;
    opt.resolution = 4e-3;
    const std::vector<int> buses{1, 3};
    const std::vector<double> labels{0.0, 1.0};
    const std::vector<double> h{0.0, 1500.0};
    auto one = cct_table(model, buses, labels, h, opt, 1);
    auto three = cct_table(model, buses, labels, h, opt, 3);
    ASSERT_EQ(one.cells.size(), 4u);
    for (std::size_t k = 0; k < 4; ++k) {
        EXPECT_EQ(one.cells[k].cct, three.cells[k].cct);
        EXPECT_EQ(one.cells[k].status, three.cells[k].status);
    }
    EXPECT_THROW((void)cct_table(model, {99}, labels, h, opt, 1), std::invalid_argument);
}

TEST(Ras, CoarseGrid) {
    auto model = bundled_model("case3");
    RasGrid g;
    g.nx = 3;
    g.ny = 3;
    auto map = ras_scan(model, 0.0, g, {}, 2);
    EXPECT_TRUE(map.complete);
    EXPECT_EQ(map.evaluated_count(), 9);
    EXPECT_EQ(map.at(1, 1), 1);
    EXPECT_EQ(map.at(0, 0), 0);
    EXPECT_EQ(map.at(2, 2), 0);
    EXPECT_EQ(map.at(0, 2), 0);
    EXPECT_EQ(map.at(2, 0), 0);
    EXPECT_DOUBLE_EQ(map.xs.front(), -std::numbers::pi);
    EXPECT_DOUBLE_EQ(map.ys.back(), std::numbers::pi);
}

TEST(Ras, InitialStateOffsetsRelativeToReference) {
    auto model = bundled_model("case3");
    Simulator sim(model, Scenario{});
    RasGrid g;
    auto s = ras_initial_state(sim, g, 0.3, -0.2);
    const auto& eq = sim.initial_state();
    EXPECT_DOUBLE_EQ(s.delta(0), eq.delta(0));
    EXPECT_DOUBLE_EQ(s.delta(1) - s.delta(0), eq.delta(1) - eq.delta(0) + 0.3);
    EXPECT_DOUBLE_EQ(s.delta(2) - s.delta(0), eq.delta(2) - eq.delta(0) - 0.2);
    EXPECT_EQ(s.omega.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Ras, BudgetGivesPartialMap) {
    auto model = bundled_model("case3");
    RasGrid g;
    g.nx = 5;
    g.ny = 5;
    g.horizon = 2.0;
    g.max_simulations = 4;
    auto map = ras_scan(model, 0.0, g);
    EXPECT_FALSE(map.complete);
    EXPECT_EQ(map.evaluated_count(), 4);
}

TEST(Ras, Containment) {
    RasMap a;
    a.xs = {0.0, 1.0};
    a.ys = {0.0};
    a.cells = {1, 0};
    RasMap b = a;
    b.cells = {1, 1};
    EXPECT_TRUE(ras_contained(a, b));
    EXPECT_FALSE(ras_contained(b, a));
    b.cells = {-1, 1};
    EXPECT_TRUE(ras_contained(a, b));  // unevaluated points are skipped
}

}  // namespace
}  // namespace v2gsim
