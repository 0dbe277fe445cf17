#include "smmergo/cli.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace smmergo;
namespace fs = std::filesystem;

namespace {

struct CliRun {
    int code = 0;
    std::string out, err;
};

CliRun cli(std::vector<std::string> args) {
    args.insert(args.begin(), "smmergo");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    CliRun r;
    r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("smmergo_cli_" + std::to_string(::getpid()) + "_" +
                ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path write_config(const std::string& name, const std::string& text) const {
        const fs::path p = dir_ / name;
        std::ofstream(p) << text;
        return p;
    }

    fs::path dir_;
};

// Cheap settings for every experiment.
const char* small_config = R"(
[weighting]
t = 2000
r = 40

[estimate]
candidates = 8
runs = 2
emp_t = 3000
scenarios = a, b, e

[scenario:a]
t = 2000
n = 1

[scenario:b]
t = 1000
n = 2

[scenario:e]
t = 1000
n = 4

[surface]
t = 1000
n = 1

[true_moments]
t_list = 1000, 2000
runs = 4

[sensitivity]
points = 3
t = 1000
n = 2
r = 2
params = b

[convergence]
runs = 3
true_t = 2000
true_r = 3
long_t = 2000
ensemble_t = 500
ensemble_n = 4

[robustness]
sets_per_size = 1

[wiener]
t = 1000
paths = 1000
)";

}  // namespace

TEST_F(CliTest, UnknownSubcommandExitsOne) {
    const auto r = cli({"frobnicate"});
    EXPECT_EQ(r.code, 1);
    EXPECT_FALSE(r.err.empty());
    EXPECT_EQ(cli({}).code, 1);
    // The installed binary reports the same exit status.
    const std::string cmd = std::string(SMMERGO_CLI_PATH) + " frobnicate >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    ASSERT_TRUE(WIFEXITED(status));
    EXPECT_EQ(WEXITSTATUS(status), 1);
}

TEST_F(CliTest, BadConfigNamesTheField) {
    const auto bad = write_config("bad.ini", "[estimate]\ncandidatez = 3\n");
    auto r = cli({"estimate", "--config", bad.string(), "--out", (dir_ / "o").string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("estimate.candidatez"), std::string::npos) << r.err;

    const auto bad2 = write_config("bad2.ini", "[weighting]\nr = many\n");
    r = cli({"estimate", "--config", bad2.string(), "--out", (dir_ / "o").string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("weighting.r"), std::string::npos) << r.err;

    const auto bad3 = write_config("bad3.ini", "[params]\nchi = 1.0\n");
    r = cli({"simulate", "--config", bad3.string(), "--out", (dir_ / "o").string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("params.chi"), std::string::npos) << r.err;

    r = cli({"simulate", "--model", "xyz", "--out", (dir_ / "o").string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("model"), std::string::npos) << r.err;

    r = cli({"robustness", "--exclude-m6", "--out", (dir_ / "o").string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("exclude-m6"), std::string::npos) << r.err;

    r = cli({"simulate", "--config", (dir_ / "missing.ini").string()});
    EXPECT_EQ(r.code, 1);
}

TEST_F(CliTest, SimulateWritesPanelsAndProvenance) {
    const fs::path out = dir_ / "sim";
    const auto r = cli({"simulate", "--model", "fw", "--t", "3000", "--seed", "123", "--out", out.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("experiment=simulate model=fw"), std::string::npos);
    for (const char* f : {"report.csv", "raw.csv", "timing.csv", "config_effective.csv", "panel_trace.csv",
                          "panel_density.csv", "panel_hill.csv", "panel_acf.csv"})
        EXPECT_TRUE(fs::exists(out / f)) << f;
    const std::string report = slurp(out / "report.csv");
    EXPECT_EQ(report.rfind("# tool=smmergo", 0), 0u);
    EXPECT_NE(report.find("# master_seed=123\n"), std::string::npos);
    EXPECT_NE(report.find("# experiment=simulate\n"), std::string::npos);
    EXPECT_NE(slurp(out / "config_effective.csv").find("seed=123"), std::string::npos);
    const Table raw = read_csv(out / "raw.csv");
    EXPECT_EQ(raw.size(), 3000u);
    const Table rep = read_csv(out / "report.csv");
    EXPECT_EQ(rep.size(), 18u);
    EXPECT_EQ(read_csv(out / "panel_acf.csv").size(), 100u);
}

TEST_F(CliTest, ConfigHashTracksSettings) {
    const auto a = cli({"simulate", "--t", "1000", "--seed", "1", "--out", (dir_ / "a").string()});
    const auto b = cli({"simulate", "--t", "1000", "--seed", "2", "--out", (dir_ / "b").string()});
    const auto c = cli({"simulate", "--t", "1000", "--seed", "1", "--workers", "4", "--out", (dir_ / "c").string()});
    ASSERT_EQ(a.code, 0);
    ASSERT_EQ(b.code, 0);
    ASSERT_EQ(c.code, 0);
    const auto hash_line = [](const std::string& s) {
        const auto p = s.find("# config_hash=");
        return s.substr(p, s.find('\n', p) - p);
    };
    const std::string ha = hash_line(slurp(dir_ / "a" / "report.csv"));
    EXPECT_NE(ha, hash_line(slurp(dir_ / "b" / "report.csv")));
    EXPECT_EQ(ha, hash_line(slurp(dir_ / "c" / "report.csv")));
    EXPECT_EQ(slurp(dir_ / "a" / "raw.csv"), slurp(dir_ / "c" / "raw.csv"));
}

TEST_F(CliTest, SurfaceGridRowCount) {
    const auto cfg = write_config("small.ini", small_config);
    const fs::path out = dir_ / "surface";
    const auto r = cli({"surface", "--model", "fw", "--free", "chi,alpha_p", "--grid", "41", "--config", cfg.string(),
                        "--workers", "2", "--out", out.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const Table rep = read_csv(out / "report.csv");
    EXPECT_EQ(rep.size(), 1681u);
    EXPECT_EQ(rep.columns[3], "chi_display");
    EXPECT_EQ(rep.columns[4], "alpha_p_display");
    EXPECT_NE(r.out.find("cells=1681"), std::string::npos);
    // wrong number of free parameters
    EXPECT_EQ(cli({"surface", "--model", "fw", "--free", "chi", "--out", out.string()}).code, 1);
}

TEST_F(CliTest, ReportsByteIdenticalAcrossWorkerCounts) {
    const auto cfg = write_config("small.ini", small_config);
    for (const char* sub : {"estimate", "sensitivity", "converge"}) {
        const fs::path a = dir_ / (std::string(sub) + "_1");
        const fs::path b = dir_ / (std::string(sub) + "_4");
        ASSERT_EQ(cli({sub, "--config", cfg.string(), "--workers", "1", "--out", a.string()}).code, 0) << sub;
        ASSERT_EQ(cli({sub, "--config", cfg.string(), "--workers", "4", "--out", b.string()}).code, 0) << sub;
        EXPECT_EQ(slurp(a / "report.csv"), slurp(b / "report.csv")) << sub;
        EXPECT_EQ(slurp(a / "raw.csv"), slurp(b / "raw.csv")) << sub;
    }
}

TEST_F(CliTest, RobustnessWritesNestedEstimation) {
    const auto cfg = write_config("small.ini", small_config);
    const fs::path out = dir_ / "rob";
    const auto r = cli({"robustness", "--config", cfg.string(), "--out", out.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(out / "estimate" / "report.csv"));
    EXPECT_TRUE(fs::exists(out / "estimate" / "weighting.csv"));
    const Table rep = read_csv(out / "report.csv");
    std::size_t comparisons = 0;
    for (const auto& row : rep.rows) comparisons += row[rep.column("part")] == "j18_vs_j17";
    EXPECT_EQ(comparisons, 3u);
}

TEST_F(CliTest, RuntimeFailureExitsTwo) {
    // Every candidate diverges: strong chartist predisposition with no misalignment pull.
    const auto cfg = write_config("wild.ini", std::string(small_config) +
                                                  "\n[params]\nchi = 400\nalpha_0 = -30\nalpha_p = 0.000000001\n");
    const auto r = cli({"surface", "--model", "fw", "--grid", "2", "--config", cfg.string(), "--out",
                        (dir_ / "wild").string()});
    EXPECT_EQ(r.code, 2) << r.out << r.err;
    EXPECT_NE(r.err.find("runtime failure"), std::string::npos);
}
