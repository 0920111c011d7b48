// Copyright 2026 The bellsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>
#include <unistd.h>

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bellsim/cli.hpp"
#include "json.hpp"

namespace {

namespace fs = std::filesystem;
using bellsim::cli::run;

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result invoke(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

class CliTest : public ::testing::Test {
  protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("bellsim_cli_" + std::to_string(::getpid()) + "_" +
                ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    fs::path dir_;
};

std::vector<std::string> csv_column(const std::string& text, std::size_t col) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || std::isalpha(static_cast<unsigned char>(line[0]))) {
            continue;
        }
        std::istringstream row(line);
        std::string cell;
        for (std::size_t k = 0; k <= col; ++k) {
            std::getline(row, cell, ',');
        }
        out.push_back(cell);
    }
    return out;
}

// --- helpers -----------------------------------------------------------------

TEST(CliParse, Angles) {
    EXPECT_NEAR(bellsim::cli::parse_angle("22.5deg").radians(), bellsim::kPi / 8, 1e-15);
    EXPECT_EQ(bellsim::cli::parse_angle("0.5rad").radians(), 0.5);
    EXPECT_NEAR(bellsim::cli::parse_angle_value("-45deg"), -bellsim::kPi / 4, 1e-15);
    EXPECT_THROW(bellsim::cli::parse_angle("0.5"), std::invalid_argument);
    EXPECT_THROW(bellsim::cli::parse_angle("0.5grad"), std::invalid_argument);
    EXPECT_THROW(bellsim::cli::parse_angle("deg"), std::invalid_argument);
    EXPECT_THROW(bellsim::cli::parse_angle("1x5rad"), std::invalid_argument);
}

TEST(CliParse, ConfigText) {
    const auto e = bellsim::cli::parse_config_text("# run\nsource = qm\n\neta=0.5  # lossy\r\n");
    ASSERT_EQ(e.size(), 2u);
    EXPECT_EQ(e[0].first, "source");
    EXPECT_EQ(e[0].second, "qm");
    EXPECT_EQ(e[1].second, "0.5");
    EXPECT_THROW(bellsim::cli::parse_config_text("novalue\n"), std::invalid_argument);
    EXPECT_THROW(bellsim::cli::parse_config_text("=3\n"), std::invalid_argument);
}

TEST(CliParse, FormatDoubleRoundTrips) {
    for (double v : {0.1, 1.0 / 3, 1e-300, -2.5e17, 0.0}) {
        EXPECT_EQ(std::stod(bellsim::cli::format_double(v)), v);
    }
    EXPECT_EQ(bellsim::cli::format_double(0.5), "0.5");
}

// --- predict -----------------------------------------------------------------

TEST(CliPredict, IdealSameDirection) {
    const auto r = invoke({"predict", "--eta", "1", "--F", "1", "--a", "0rad", "--b", "0rad"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("# bellsim 0.1.0 predict"), std::string::npos);
    std::istringstream in(r.out);
    std::string line;
    std::vector<std::string> rows;
    while (std::getline(in, line)) {
        rows.push_back(line);
    }
    // Header, note, column labels, then the +1 row.
    std::istringstream plus(rows.at(3));
    std::string label;
    double pp = 0;
    double pm = 0;
    double p0 = 0;
    plus >> label >> pp >> pm >> p0;
    EXPECT_EQ(label, "+1");
    EXPECT_DOUBLE_EQ(pp, 0.5);
    EXPECT_NEAR(pm, 0.0, 1e-16);
    EXPECT_EQ(p0, 0.0);
}

TEST(CliPredict, LossyTableHasFactorizedDoubleLoss) {
    const auto r = invoke({"predict", "--eta", "0.81", "--a", "0deg", "--b", "22.5deg"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto pos = r.out.rfind("\n  0");
    ASSERT_NE(pos, std::string::npos);
    std::istringstream row(r.out.substr(pos + 1));
    std::string label;
    double a = 0;
    double b = 0;
    double c = 0;
    row >> label >> a >> b >> c;
    EXPECT_NEAR(c, 0.01, 1e-15);
}

TEST(CliPredict, MalformedAngleIsUsageError) {
    const auto r = invoke({"predict", "--a", "0", "--b", "0rad"});
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.err.find("error"), std::string::npos);
    EXPECT_NE(invoke({"predict", "--a", "0rad"}).code, 0);
    EXPECT_NE(invoke({"nonsense"}).code, 0);
    EXPECT_NE(invoke({}).code, 0);
}

// --- scan --------------------------------------------------------------------

TEST_F(CliTest, ScanIntervalAndFiles) {
    const auto r = invoke({"scan", "--eta", "1", "--F", "1", "--grid", "256", "--out", path("s.csv"), "--svg", path("s.svg")});
    ASSERT_EQ(r.code, 0) << r.err;
    const std::string csv = slurp(path("s.csv"));
    EXPECT_NE(csv.find("phi_rad,G,violated\n"), std::string::npos);
    const auto pos = csv.find("violation_intervals=[");
    ASSERT_NE(pos, std::string::npos);
    double lo = 0;
    double hi = 0;
    char sep = 0;
    std::istringstream(csv.substr(pos + 21)) >> lo >> sep >> hi;
    EXPECT_NEAR(lo, 0.0, 1e-9);
    EXPECT_NEAR(hi, 1.1960618940740066, 1e-9);
    EXPECT_EQ(csv_column(csv, 0).size(), 256u);
    const std::string svg = slurp(path("s.svg"));
    EXPECT_NE(svg.find("<polyline"), std::string::npos);
    EXPECT_NE(svg.find("G=0"), std::string::npos);
    EXPECT_EQ(csv.find('\r'), std::string::npos);
}

TEST(CliScan, ViolationColumnIndependentOfEta) {
    const auto a = invoke({"scan", "--eta", "1", "--F", "1"});
    const auto b = invoke({"scan", "--eta", "0.001", "--F", "1"});
    ASSERT_EQ(a.code, 0);
    ASSERT_EQ(b.code, 0);
    EXPECT_EQ(csv_column(a.out, 2), csv_column(b.out, 2));
    EXPECT_NE(a.out, b.out);
}

TEST(CliScan, NoCorrelationNoViolation) {
    const auto r = invoke({"scan", "--F", "0"});
    ASSERT_EQ(r.code, 0) << r.err;
    for (const auto& v : csv_column(r.out, 2)) {
        EXPECT_EQ(v, "0");
    }
    EXPECT_NE(r.out.find("violation_intervals=none"), std::string::npos);
    EXPECT_NE(invoke({"scan", "--grid", "10"}).code, 0);
    EXPECT_NE(invoke({"scan", "--eta", "0"}).code, 0);
}

// --- tables ------------------------------------------------------------------

TEST(CliTables, DefaultRun) {
    const auto r = invoke({"tables"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_LE(j["max_abs_discrepancy"].get<double>(), 1e-12);
    EXPECT_EQ(j["ideal"]["max_g"].get<double>(), 0.0);
    EXPECT_EQ(j["ideal"]["rows"].size(), 16u);
    EXPECT_EQ(j["samples"].get<int>(), 10000);
}

TEST(CliTables, ZeroSamplesIsAnError) {
    const auto r = invoke({"tables", "--samples", "0"});
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.err.find("samples"), std::string::npos);
}

TEST(CliTables, RepeatableWithSeed) {
    const auto a = invoke({"tables", "--samples", "500", "--seed", "9"});
    const auto b = invoke({"tables", "--samples", "500", "--seed", "9"});
    EXPECT_EQ(a.out, b.out);
}

// --- btcc --------------------------------------------------------------------

TEST(CliBtcc, Verdicts) {
    const auto det = invoke({"btcc", "--model", "det_sign", "--samples", "100000"});
    ASSERT_EQ(det.code, 0) << det.err;
    EXPECT_EQ(nlohmann::json::parse(det.out)["verdict"], "PerfectCorrelationAchieved");

    const auto malus = invoke({"btcc", "--model", "malus_stochastic"});
    ASSERT_EQ(malus.code, 0) << malus.err;
    const auto j = nlohmann::json::parse(malus.out);
    EXPECT_EQ(j["verdict"], "PerfectCorrelationFailed_Stochastic");
    EXPECT_NEAR(j["c_same"].get<double>(), 0.5, 0.01);
    EXPECT_EQ(j["tol"].get<double>(), 1e-4);
    EXPECT_EQ(j["stderr_multiplier"].get<double>(), 3.0);
}

TEST(CliBtcc, UnknownModelListsBuiltins) {
    const auto r = invoke({"btcc", "--model", "pilot_wave"});
    EXPECT_NE(r.code, 0);
    for (const char* name : {"det_sign", "malus_stochastic", "det_sign_lossy", "malus_lossy", "direction_biased_loss"}) {
        EXPECT_NE(r.err.find(name), std::string::npos) << name;
    }
}

TEST(CliBtcc, SeedFromEnvironment) {
    const auto flag = invoke({"btcc", "--model", "malus_stochastic", "--samples", "20000", "--seed", "5"});
    ::setenv(bellsim::cli::kSeedEnvVar, "5", 1);
    const auto env = invoke({"btcc", "--model", "malus_stochastic", "--samples", "20000"});
    ::unsetenv(bellsim::cli::kSeedEnvVar);
    const auto dflt = invoke({"btcc", "--model", "malus_stochastic", "--samples", "20000"});
    EXPECT_EQ(flag.out, env.out);
    EXPECT_NE(flag.out, dflt.out);
    EXPECT_NE(dflt.out.find("\"seed\": \"20260417\""), std::string::npos);
}

// --- simulate ----------------------------------------------------------------

TEST_F(CliTest, SimulateFromConfigFile) {
    {
        std::ofstream cfg(path("run.cfg"));
        cfg << "# lossy QM run\nsource = qm\neta = 0.1\nphi = 45deg\npairs_per_setting = 1000000\n"
            << "counts_out = " << path("counts.csv") << "\nreport_out = " << path("report.json") << "\n";
    }
    const auto r = invoke({"simulate", path("run.cfg")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rep = nlohmann::json::parse(slurp(path("report.json")));
    EXPECT_NEAR(rep["ratio"]["ratio"].get<double>(), (1 + std::sqrt(2.0)) / 2, 3 * rep["ratio"]["stderr"].get<double>());
    EXPECT_TRUE(rep["ratio"]["violated"].get<bool>());
    EXPECT_TRUE(rep["g"]["bound_violated"].get<bool>());
    EXPECT_TRUE(rep["assumption_a"]["pass"].get<bool>());
    EXPECT_EQ(rep["header"]["config"]["pairs_per_setting"], "1000000");

    const std::string csv = slurp(path("counts.csv"));
    EXPECT_TRUE(csv.starts_with("# bellsim 0.1.0 simulate source=qm(sign=1,F=1,eta=0.1)"));
    EXPECT_NE(csv.find("pair_index,a_rad,b_rad,r,q,count,n_emitted\n"), std::string::npos);
    EXPECT_EQ(csv_column(csv, 0).size(), 6u * 9u);
}

TEST_F(CliTest, SimulateFlagsOverrideConfig) {
    {
        std::ofstream cfg(path("run.cfg"));
        cfg << "source=det_sign_lossy(0.5)\npairs_per_setting=1000\nreport_out=" << path("r.json")
            << "\ncounts_out=" << path("c.csv") << "\n";
    }
    ASSERT_EQ(invoke({"simulate", "--config", path("run.cfg"), "--pairs-per-setting", "2000"}).code, 0);
    const auto rep = nlohmann::json::parse(slurp(path("r.json")));
    EXPECT_EQ(rep["header"]["config"]["pairs_per_setting"], "2000");
    EXPECT_EQ(rep["header"]["config"]["source"], "det_sign_lossy(0.5)");
}

TEST_F(CliTest, SimulateDirectionalLossFailsAssumptionA) {
    const auto r = invoke({"simulate", "--source", "direction_biased_loss(0.8,0.1)", "--pairs-per-setting", "1000000",
                           "--counts-out", path("c.csv"), "--report-out", path("r.json")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rep = nlohmann::json::parse(slurp(path("r.json")));
    EXPECT_FALSE(rep["assumption_a"]["pass"].get<bool>());
}

TEST_F(CliTest, SimulateLossyDeterministicModelRespectsRatio) {
    const auto r = invoke({"simulate", "--source", "det_sign_lossy(0.5)", "--pairs-per-setting", "1000000",
                           "--counts-out", path("c.csv"), "--report-out", path("r.json")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rep = nlohmann::json::parse(slurp(path("r.json")));
    EXPECT_FALSE(rep["ratio"]["violated"].get<bool>());
}

TEST_F(CliTest, SimulateByteIdenticalAcrossWorkers) {
    std::vector<std::string> base = {"simulate", "--source", "malus_lossy(0.8)", "--pairs-per-setting", "300000",
                                     "--seed", "17"};
    std::string counts;
    std::string report;
    for (const char* w : {"1", "2", "5"}) {
        auto args = base;
        args.insert(args.end(), {std::string("--workers"), std::string(w), std::string("--counts-out"),
                                 path(std::string("c") + w), std::string("--report-out"), path(std::string("r") + w)});
        ASSERT_EQ(invoke(args).code, 0);
        const auto c = slurp(path(std::string("c") + w));
        const auto r = slurp(path(std::string("r") + w));
        if (counts.empty()) {
            counts = c;
            report = r;
        }
        EXPECT_EQ(c, counts) << w;
        EXPECT_EQ(r, report) << w;
    }
}

TEST_F(CliTest, SimulateErrors) {
    EXPECT_NE(invoke({"simulate", path("missing.cfg")}).code, 0);
    EXPECT_NE(invoke({"simulate", "--phi", "3rad", "--counts-out", path("c"), "--report-out", path("r")}).code, 0);
    EXPECT_NE(invoke({"simulate", "--r", "0", "--pairs-per-setting", "10", "--counts-out", path("c"),
                      "--report-out", path("r")}).code, 0);
}

TEST(CliMisc, VersionAndHelp) {
    const auto v = invoke({"--version"});
    EXPECT_EQ(v.code, 0);
    EXPECT_NE(v.out.find("0.1.0"), std::string::npos);
    const auto h = invoke({"--help"});
    EXPECT_EQ(h.code, 0);
    EXPECT_NE(h.out.find("simulate"), std::string::npos);
}

}  // namespace
