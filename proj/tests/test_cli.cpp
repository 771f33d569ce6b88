#include "mvsel/io.hpp"
#include "mvsel/simulate.hpp"
#include "support.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace mvsel;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / (std::string("mvsel_cli_") + info->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path path(const std::string& name) const { return dir_ / name; }

    /// Exit status of the CLI; stdout and stderr go to files in the test directory.
    int run(const std::string& args) const {
        const std::string cmd = std::string(MVSEL_CLI_PATH) + " " + args + " >" +
                                (dir_ / "stdout.txt").string() + " 2>" +
                                (dir_ / "stderr.txt").string();
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    std::string stderrText() const { return slurp(dir_ / "stderr.txt"); }
    std::string stdoutText() const { return slurp(dir_ / "stdout.txt"); }

    static std::string slurp(const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    /// Simulated data written in the input CSV format.
    fs::path writeData(const std::string& name, Index q, double phi, double kappa,
                       Index n = 30) const {
        SimulationConfig cfg;
        cfg.n = n;
        cfg.q = q;
        cfg.phi1 = phi;
        cfg.kappa = kappa;
        cfg.sparsity = 0.03;
        cfg.lags = std::min<Index>(10, q - 1);
        const SimulatedDataset d = generateDataset(cfg, 0);
        std::ofstream out(path(name));
        out << "condition";
        for (Index k = 0; k < q; ++k) out << ",m" << k + 1;
        out << '\n';
        for (Index i = 0; i < d.y.rows(); ++i) {
            out << d.labels.labels[static_cast<std::size_t>(i)];
            for (Index k = 0; k < q; ++k) out << ',' << formatExact(d.y(i, k));
            out << '\n';
        }
        return path(name);
    }

    fs::path writeText(const std::string& name, const std::string& text) const {
        std::ofstream(path(name)) << text;
        return path(name);
    }

    fs::path dir_;
};

}  // namespace

TEST_F(CliTest, SelectWritesAllReports) {
    const fs::path data = writeData("data.csv", 40, 0.9, 4.0);
    ASSERT_EQ(run("select --input " + data.string() + " --out " + path("out").string() +
                  " --resamples 40 --seed 3"),
              0)
        << stderrText();
    for (const char* f : {"whitening.csv", "frequencies.csv", "support.csv", "run.json"})
        EXPECT_TRUE(fs::exists(path("out") / f)) << f;

    std::ifstream freqIn(path("out") / "frequencies.csv");
    const FrequencyTable table = readFrequenciesCsv(freqIn);
    EXPECT_EQ(table.levels, (std::vector<std::string>{"L1", "L2", "L3"}));
    EXPECT_EQ(table.responses.size(), 40u);
    EXPECT_GE(table.frequencies.minCoeff(), 0.0);
    EXPECT_LE(table.frequencies.maxCoeff(), 1.0);

    const auto run = nlohmann::json::parse(slurp(path("out") / "run.json"));
    EXPECT_EQ(run["config"]["seed"], 3);
    EXPECT_EQ(run["config"]["resamples"], 40);
    EXPECT_EQ(run["dimensions"]["q"], 40);
    EXPECT_GT(run["lambda_cv"].get<double>(), 0.0);
    EXPECT_EQ(run["threshold"].get<double>(), 1.0);
    EXPECT_TRUE(run.contains("version"));

    // support.csv lists exactly the coefficients at frequency one
    std::ifstream supIn(path("out") / "support.csv");
    std::string line;
    std::getline(supIn, line);
    EXPECT_EQ(line, "level,response,frequency");
    Index rows = 0;
    while (std::getline(supIn, line)) {
        EXPECT_EQ(line.substr(line.rfind(',') + 1), "1");
        ++rows;
    }
    EXPECT_EQ(rows, (table.frequencies.array() == 1.0).count());
    EXPECT_EQ(run["support_size"], rows);

    const std::string summary = stdoutText();
    EXPECT_NE(summary.find("lambda_cv"), std::string::npos);
    EXPECT_NE(summary.find("L1:"), std::string::npos);
}

TEST_F(CliTest, SelectIsByteIdenticalAcrossRuns) {
    const fs::path data = writeData("data.csv", 30, 0.7, 2.0);
    const std::string common = "select --input " + data.string() +
                               " --resamples 30 --seed 11 --threshold maxpval --threads 2 --out ";
    ASSERT_EQ(run(common + path("a").string()), 0) << stderrText();
    ASSERT_EQ(run(common + path("b").string()), 0) << stderrText();
    for (const char* f : {"whitening.csv", "frequencies.csv", "support.csv", "run.json"})
        EXPECT_EQ(slurp(path("a") / f), slurp(path("b") / f)) << f;
}

TEST_F(CliTest, SelectMaxPvalueRecordsScores) {
    const fs::path data = writeData("data.csv", 30, 0.7, 4.0);
    ASSERT_EQ(run("select --input " + data.string() + " --out " + path("o").string() +
                  " --resamples 30 --threshold maxpval --whitening ar1 --scale"),
              0)
        << stderrText();
    const auto j = nlohmann::json::parse(slurp(path("o") / "run.json"));
    EXPECT_EQ(j["threshold_scores"].size(), 11u);
    EXPECT_EQ(j["whitening"]["kind"], "ar1");
    EXPECT_EQ(j["config"]["scale"], true);
}

TEST_F(CliTest, InputErrorsExitTwo) {
    const fs::path missing = writeText("missing.csv", "condition,a,b\nA,1,2\nA,,3\nB,1,1\nB,2,2\n");
    EXPECT_EQ(run("select --input " + missing.string() + " --out " + path("o").string()), 2);
    EXPECT_NE(stderrText().find("missing value at row 2, column 1"), std::string::npos) << stderrText();

    EXPECT_EQ(run("select --input " + path("nope.csv").string() + " --out " + path("o").string()), 2);
    EXPECT_EQ(run("select --input"), 2);
    EXPECT_EQ(run("frobnicate"), 2);
    EXPECT_EQ(run("select --input x.csv --out y --whitening arma"), 2);

    const fs::path tiny = writeData("tiny.csv", 5, 0.5, 1.0);
    EXPECT_EQ(run("select --input " + tiny.string() + " --out " + path("o").string() + " --H 10"), 2);
    EXPECT_NE(stderrText().find("H"), std::string::npos);
}

TEST_F(CliTest, NumericalFailureExitsThree) {
    // a level with one sample leaves an all-zero residual row, so the
    // whitening test has no autocorrelation to compute
    std::string text = "condition,a,b,c,d\n";
    text += "A,1,2,3,4\nA,2,1,4,3\nA,0,1,1,2\nB,5,1,2,7\n";
    const fs::path data = writeText("single.csv", text);
    EXPECT_EQ(run("select --input " + data.string() + " --out " + path("o").string() + " --H 2"), 3)
        << stderrText();
    EXPECT_NE(stderrText().find("whitening"), std::string::npos) << stderrText();
}

TEST_F(CliTest, NonConvergenceExitsFour) {
    const fs::path data = writeData("data.csv", 30, 0.9, 1.0);
    EXPECT_EQ(run("select --input " + data.string() + " --out " + path("o").string() +
                  " --resamples 5 --max-sweeps 1"),
              4)
        << stderrText();
    EXPECT_NE(stderrText().find("cross-validation"), std::string::npos) << stderrText();
}

TEST_F(CliTest, WhitenTestSignalsRejection) {
    const fs::path ar = writeData("ar.csv", 400, 0.9, 0.0);
    EXPECT_EQ(run("whiten-test --input " + ar.string() + " --out " + path("w.csv").string()), 1);
    std::ifstream in(path("w.csv"));
    std::string header, identity;
    std::getline(in, header);
    std::getline(in, identity);
    EXPECT_EQ(identity.rfind("identity,", 0), 0u);
    std::stringstream fields(identity);
    std::string cell;
    for (int i = 0; i < 4; ++i) std::getline(fields, cell, ',');
    EXPECT_LT(std::stod(cell), 1e-6);

    const fs::path white = writeData("white.csv", 400, 0.0, 0.0);
    EXPECT_EQ(run("whiten-test --input " + white.string()), 0) << stdoutText();
    EXPECT_NE(stdoutText().find("identity not rejected"), std::string::npos);

    const fs::path narrow = writeData("narrow.csv", 5, 0.0, 0.0);
    EXPECT_EQ(run("whiten-test --input " + narrow.string() + " --H 5"), 2);
}

TEST_F(CliTest, SimulateWritesTidyCsv) {
    const fs::path cfg = writeText(
        "sim.json", R"({"n": 12, "p": 3, "q": 30, "phi1": 0.7, "sparsity": 0.05, "replicates": 2,
                       "resamples": 10, "seed": 4, "H": 5})");
    ASSERT_EQ(run("simulate --config " + cfg.string() + " --out " + path("sim.csv").string() +
                  " --methods raw-lasso oracle-whitened"),
              0)
        << stderrText();
    const std::string csv = slurp(path("sim.csv"));
    EXPECT_EQ(csv.rfind("replicate,method,metric,value\n", 0), 0u);
    EXPECT_NE(csv.find("1,oracle-whitened,auc,"), std::string::npos);
    EXPECT_EQ(csv.find("ar1-whitened"), std::string::npos);

    const fs::path bad = writeText("bad.json", R"({"q": 30, "colour": "blue"})");
    EXPECT_EQ(run("simulate --config " + bad.string()), 2);
    EXPECT_EQ(run("simulate --config " + path("absent.json").string()), 2);
}

TEST_F(CliTest, BenchReportsEveryCell) {
    ASSERT_EQ(run("bench --q 20,40 --resamples 5 --out " + path("t.csv").string()), 0) << stderrText();
    std::ifstream in(path("t.csv"));
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "q,resamples,seconds");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 2);
}

TEST_F(CliTest, VersionFlag) {
    EXPECT_EQ(run("--version"), 0);
    EXPECT_NE(stdoutText().find("0.1.0"), std::string::npos);
}
