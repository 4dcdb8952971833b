#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "fixtures.hpp"
#include "v2gsim/io.hpp"
#include "v2gsim/stability.hpp"

namespace v2gsim::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "v2gsim");
    std::vector<char*> argv;
    for (auto& a : args) {
        argv.push_back(a.data());
    }
    std::ostringstream out;
    std::ostringstream err;
    int code = main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("v2gsim_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string out(const std::string& sub = "") const { return (dir_ / sub).string(); }

    fs::path dir_;
    const std::string case3_ = v2gsim::testing::data_path("case3.json");
    const std::string case39_ = v2gsim::testing::data_path("case39.json");
};

TEST_F(CliTest, InfoSummarisesTheCase) {
    auto r = run_cli({"info", case39_});
    EXPECT_EQ(r.code, kOk) << r.err;
    EXPECT_NE(r.out.find("39 buses"), std::string::npos);
    EXPECT_NE(r.out.find("10 generators"), std::string::npos);

    r = run_cli({"info", "--case", case3_, "--json"});
    ASSERT_EQ(r.code, kOk);
    auto j = json::parse(r.out);
    EXPECT_EQ(j["buses"], 3);
    EXPECT_DOUBLE_EQ(j["total_load_mw"].get<double>(), 1500.0);
}

TEST_F(CliTest, MalformedCaseIsAConfigError) {
    std::ofstream(dir_ / "bad.json") << "{\n  \"system\": [\n";
    auto r = run_cli({"info", (dir_ / "bad.json").string()});
    EXPECT_EQ(r.code, kConfigError);
    EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;

    r = run_cli({"info", (dir_ / "missing.json").string()});
    EXPECT_EQ(r.code, kConfigError);
}

TEST_F(CliTest, BadFlagsAreConfigErrors) {
    EXPECT_EQ(run_cli({"cct", case39_, "--buses", "99"}).code, kConfigError);
    EXPECT_EQ(run_cli({"simulate", case3_, "--dt", "-1"}).code, kConfigError);
    EXPECT_EQ(run_cli({"simulate", case3_, "--trip", "1+2"}).code, kConfigError);
    EXPECT_EQ(run_cli({"ras", case3_, "--grid", "0x3"}).code, kConfigError);
    EXPECT_EQ(run_cli({"frobnicate"}).code, kConfigError);
    EXPECT_EQ(run_cli({"simulate"}).code, kConfigError);
}

TEST_F(CliTest, HelpAndVersion) {
    auto r = run_cli({"--help"});
    EXPECT_EQ(r.code, kOk);
    EXPECT_NE(r.out.find("simulate"), std::string::npos);
    r = run_cli({"simulate", "--help"});
    EXPECT_EQ(r.code, kOk);
    EXPECT_NE(r.out.find("--fail-on-unstable"), std::string::npos);
    EXPECT_EQ(run_cli({"--version"}).code, kOk);
}

TEST_F(CliTest, SimulateWithoutEventsIsFlat) {
    auto r = run_cli({"simulate", case3_, "--t-end", "10", "--dt", "0.001", "--out-dir", out()});
    ASSERT_EQ(r.code, kOk) << r.err;
    for (const char* f : {"trace.csv", "trace.json", "generator_frequencies.csv", "bus_frequencies.csv",
                          "voltages.csv"}) {
        EXPECT_TRUE(fs::exists(dir_ / f)) << f;
    }
    auto meta = json::parse(slurp(dir_ / "trace.json"));
    EXPECT_EQ(meta["verdict"], "stable");
    EXPECT_EQ(meta["samples"], 1001);

    std::istringstream in(slurp(dir_ / "generator_frequencies.csv"));
    int rows = 0;
    for (std::string line; std::getline(in, line);) {
        if (line.starts_with("#") || line.starts_with("t,")) {
            continue;
        }
        std::istringstream cells(line);
        std::string cell;
        std::getline(cells, cell, ',');
        while (std::getline(cells, cell, ',')) {
            EXPECT_NEAR(std::stod(cell), 60.0, 1e-9);
        }
        ++rows;
    }
    EXPECT_EQ(rows, 1001);
}

TEST_F(CliTest, UnstableRunExitCodePolicy) {
    const std::vector<std::string> base{"simulate", case3_, "--fault", "2", "--at", "1",
                                        "--dur", "0.6", "--t-end", "12", "--no-extracts",
                                        "--out-dir", out()};
    auto r = run_cli(base);
    EXPECT_EQ(r.code, kOk) << r.err;
    EXPECT_EQ(json::parse(slurp(dir_ / "trace.json"))["verdict"], "unstable");
    EXPECT_FALSE(fs::exists(dir_ / "voltages.csv"));

    auto strict = base;
    strict.push_back("--fail-on-unstable");
    EXPECT_EQ(run_cli(strict).code, kUnstable);
}

TEST_F(CliTest, CctMatchesLibraryByteForByte) {
    auto r = run_cli({"cct", case3_, "--buses", "2", "--h", "0.5", "--resolution", "0.004",
                      "--workers", "1", "--out-dir", out()});
    ASSERT_EQ(r.code, kOk) << r.err;

    auto model = prepare_model(load_case_file(case3_));
    CctOptions opt;
    opt.resolution = 0.004;
    auto table = cct_table(model, {2}, {0.5}, {750.0}, opt, 1);
    auto embedded = json::parse(slurp(dir_ / "cct.json"))["config"];
    std::ostringstream expected;
    write_cct_csv(expected, table, opt, embedded);
    EXPECT_EQ(slurp(dir_ / "cct.csv"), expected.str());

    auto again = run_cli({"cct", case3_, "--buses", "2", "--h", "0.5", "--resolution", "0.004",
                          "--workers", "3", "--out-dir", out("w3")});
    ASSERT_EQ(again.code, kOk);
    EXPECT_EQ(json::parse(slurp(dir_ / "w3" / "cct.json"))["cells"],
              json::parse(slurp(dir_ / "cct.json"))["cells"]);
}

TEST_F(CliTest, AlphaSinglePointMatchesLibrary) {
    auto r = run_cli({"alpha", case39_, "--h", "0", "--out-dir", out()});
    ASSERT_EQ(r.code, kOk) << r.err;
    auto j = json::parse(slurp(dir_ / "alpha.json"));
    auto model = prepare_model(load_case_file(case39_));
    EXPECT_EQ(j["points"][0]["alpha"].get<double>(), alpha(linearize(*model, 0.0)).alpha);
}

TEST_F(CliTest, RasCoarseGridAndSummary) {
    auto r = run_cli({"ras", case3_, "--h", "0,2", "--grid", "3x3", "--horizon", "10", "--out-dir", out()});
    ASSERT_EQ(r.code, kOk) << r.err;
    auto s = json::parse(slurp(dir_ / "ras_summary.json"));
    ASSERT_EQ(s["maps"].size(), 2u);
    EXPECT_GE(s["maps"][0]["stable"].get<int>(), 1);
    EXPECT_TRUE(s["maps"][1]["contains_baseline"].get<bool>());
    EXPECT_TRUE(fs::exists(dir_ / "ras_h0.csv"));
    EXPECT_TRUE(fs::exists(dir_ / "ras_h2.dat"));
}

TEST_F(CliTest, ConfigFileOverridesFlags) {
    std::ofstream(dir_ / "run.json") << R"({"t_end": 0.5, "control": {"trigger_enabled": false},
        "events": [{"time": 0.1, "action": "branch_trip", "branch": [1, 2]}]})";
    auto r = run_cli({"simulate", case3_, "--t-end", "9", "--config", (dir_ / "run.json").string(),
                      "--out-dir", out()});
    ASSERT_EQ(r.code, kOk) << r.err;
    auto meta = json::parse(slurp(dir_ / "trace.json"));
    EXPECT_EQ(meta["samples"], 51);
    EXPECT_EQ(meta["config"]["t_end"], 0.5);
    EXPECT_EQ(meta["config"]["control"]["trigger_enabled"], false);
    EXPECT_EQ(meta["config"]["events"].size(), 1u);

    std::ofstream(dir_ / "typo.json") << R"({"t_ennd": 0.5})";
    r = run_cli({"simulate", case3_, "--config", (dir_ / "typo.json").string(), "--out-dir", out()});
    EXPECT_EQ(r.code, kConfigError);
    EXPECT_NE(r.err.find("/t_ennd"), std::string::npos);
}

TEST_F(CliTest, EveryOutputEmbedsTheConfiguration) {
    ASSERT_EQ(run_cli({"simulate", case3_, "--t-end", "0.2", "--out-dir", out()}).code, kOk);
    ASSERT_EQ(run_cli({"powerflow", case3_, "--out-dir", out()}).code, kOk);
    for (const auto& entry : fs::directory_iterator(dir_)) {
        const auto text = slurp(entry.path());
        EXPECT_NE(text.find("\"command\""), std::string::npos) << entry.path();
        EXPECT_NE(text.find("\"case\""), std::string::npos) << entry.path();
    }
}

}  // namespace
}  // namespace v2gsim::cli
