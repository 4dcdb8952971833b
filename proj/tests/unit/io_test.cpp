#include <cmath>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "v2gsim/io.hpp"

namespace v2gsim {
namespace {

using testing::load_bundled;

std::vector<std::string> data_lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
        if (!line.starts_with("#")) {
            out.push_back(line);
        }
    }
    return out;
}

TEST(Events, RoundTripWithCaseNumbers) {
    auto sys = load_bundled("case39");
    const int k = *sys.branch_index(5, 6);
    const std::vector<Event> events{{1.0, EventKind::bus_fault_on, *sys.bus_index(16)},
                                    {1.1, EventKind::fault_clear, -1},
                                    {2.0, EventKind::branch_trip, k},
                                    {2.5, EventKind::branch_restore, k}};
    for (const auto& ev : events) {
        auto j = event_to_json(ev, sys);
        auto back = event_from_json(j, sys);
        EXPECT_EQ(back.time, ev.time);
        EXPECT_EQ(back.kind, ev.kind);
        EXPECT_EQ(back.target, ev.target);
    }
    EXPECT_EQ(event_to_json(events[0], sys)["bus"], 16);
    EXPECT_EQ(event_to_json(events[2], sys)["branch"], Json::array({5, 6}));
}

TEST(Events, ErrorsNameTheField) {
    auto sys = load_bundled("case39");
    auto where = [&](const Json& j) -> std::string {
        try {
            (void)event_from_json(j, sys, "/events/3");
        } catch (const ConfigError& e) {
            return e.what();
        }
        return "";
    };
    EXPECT_TRUE(where({{"time", 1.0}, {"action", "explode"}}).starts_with("/events/3/action"));
    EXPECT_TRUE(where({{"time", 1.0}, {"action", "bus_fault_on"}, {"bus", 99}}).starts_with("/events/3/bus"));
    EXPECT_TRUE(where({{"time", 1.0}, {"action", "branch_trip"}, {"branch", {1, 30}}}).starts_with("/events/3/branch"));
    EXPECT_TRUE(where({{"time", "soon"}, {"action", "fault_clear"}}).starts_with("/events/3/time"));
    EXPECT_TRUE(where({{"time", 1.0}, {"action", "fault_clear"}, {"colour", 1}}).starts_with("/events/3/colour"));
}

TEST(Scenario, JsonRoundTrip) {
    auto sys = load_bundled("case3");
    Scenario sc;
    sc.t_end = 12.5;
    sc.dt = 5e-4;
    sc.events = {{1.0, EventKind::bus_fault_on, 2}, {1.2, EventKind::fault_clear, -1}};
    sc.control.h_mw_per_hz = 600.0;
    sc.control.trigger_enabled = false;
    sc.control.washout_tw = 0.05;
    auto back = scenario_from_json(scenario_to_json(sc, sys), sys);
    EXPECT_EQ(scenario_to_json(back, sys), scenario_to_json(sc, sys));
}

TEST(Scenario, OverlayAndValidation) {
    auto sys = load_bundled("case3");
    auto sc = scenario_from_json({{"t_end", 3.0}, {"control", {{"sleep_df", 0.02}}}}, sys);
    EXPECT_EQ(sc.t_end, 3.0);
    EXPECT_EQ(sc.control.sleep_df, 0.02);
    EXPECT_EQ(sc.control.activation_dfdt, 0.1);
    EXPECT_THROW((void)scenario_from_json({{"dt", -1.0}}, sys), ConfigError);
    EXPECT_THROW((void)scenario_from_json({{"control", {{"h_mw_per_hz", -3.0}}}}, sys), ConfigError);
    EXPECT_THROW((void)scenario_from_json({{"tend", 3.0}}, sys), ConfigError);
}

TEST(Format, ShortestRoundTrip) {
    for (double x : {0.1, 1.0 / 3.0, 6254.23, -2.5e-17, 1e300}) {
        EXPECT_EQ(std::stod(format_number(x)), x);
    }
    EXPECT_EQ(format_number(0.1), "0.1");
    EXPECT_EQ(format_number(std::numeric_limits<double>::quiet_NaN()), "NaN");
    EXPECT_EQ(format_number(-std::numeric_limits<double>::infinity()), "-Inf");
}

TEST(TraceCsv, HeaderAndProvenance) {
    Scenario sc;
    sc.t_end = 0.05;
    auto trace = simulate(testing::bundled_model("case3"), sc);
    std::ostringstream os;
    write_trace_csv(os, trace, {{"command", "simulate"}});
    const auto text = os.str();
    EXPECT_TRUE(text.starts_with("# {\n#   \"command\": \"simulate\"\n# }\n"));
    auto lines = data_lines(text);
    ASSERT_EQ(lines.size(), 7u);
    EXPECT_EQ(lines[0],
              "t,delta_g1,delta_g2,delta_g3,omega_g1,omega_g2,omega_g3,v_b1,v_b2,v_b3,"
              "theta_b1,theta_b2,theta_b3,p_pevg_b1,p_pevg_b2,p_pevg_b3");
    EXPECT_TRUE(lines[6].starts_with("0.05,"));

    auto meta = trace_metadata(trace, {{"command", "simulate"}});
    EXPECT_EQ(meta["samples"], 6);
    EXPECT_EQ(meta["instability"]["kind"], "none");
}

TEST(CctCsv, LayoutAndSentinels) {
    CctTable t;
    t.buses = {7, 12};
    t.h_values = {0.0, 0.3};
    t.h_mw_per_hz = {0.0, 1860.0};
    t.cells.resize(4);
    t.cells[0] = {CctResult::Status::found, 0.125, 12, ""};
    t.cells[1] = {CctResult::Status::stable_at_max, 1.0, 2, ""};
    t.cells[2] = {CctResult::Status::unclearable, 0.0, 1, ""};
    t.cells[3] = {CctResult::Status::failed, std::numeric_limits<double>::quiet_NaN(), 3, "boom"};
    std::ostringstream os;
    write_cct_csv(os, t, CctOptions{}, Json::object());
    auto lines = data_lines(os.str());
    ASSERT_EQ(lines.size(), 3u);
    EXPECT_EQ(lines[0], "bus,h=0,h=0.3");
    EXPECT_EQ(lines[1], "7,0.125,>=1");
    EXPECT_EQ(lines[2], "12,0,NaN");

    auto j = cct_json(t, CctOptions{}, Json::object());
    EXPECT_EQ(j["cells"][3]["status"], "failed");
    EXPECT_EQ(j["cells"][3]["error"], "boom");
}

TEST(RasFiles, GridAndMatrix) {
    RasMap m;
    m.xs = {-1.0, 0.0, 1.0};
    m.ys = {-2.0, 2.0};
    m.cells = {0, 1, 0, -1, 1, 1};
    std::ostringstream csv;
    write_ras_csv(csv, m, Json::object());
    auto lines = data_lines(csv.str());
    ASSERT_EQ(lines.size(), 2u);
    EXPECT_EQ(lines[0], "0,1,0");
    EXPECT_EQ(lines[1], "-1,1,1");

    std::ostringstream mat;
    write_ras_matrix(mat, m, Json::object());
    lines = data_lines(mat.str());
    ASSERT_EQ(lines.size(), 3u);
    EXPECT_EQ(lines[0], "3 -1 0 1");
}

}  // namespace
}  // namespace v2gsim
