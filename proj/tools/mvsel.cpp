// Command-line front end: select, whiten-test, simulate, bench.

#include "mvsel/errors.hpp"
#include "mvsel/io.hpp"
#include "mvsel/pipeline.hpp"
#include "mvsel/simulate.hpp"
#include "mvsel/version.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <omp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace mvsel;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitConvergence = 4;
constexpr int kExitRejected = 1;

struct SelectArgs {
    std::string input;
    std::string out;
    std::string whitening = "auto";
    Index lags = 10;
    Index resamples = 5000;
    bool smoke = false;
    std::string threshold = "one";
    std::uint64_t seed = 42;
    bool scale = false;
    int threads = 0;
    Index max_sweeps = 100000;
};

struct WhitenArgs {
    std::string input;
    std::string out;
    Index lags = 10;
    bool scale = false;
    double alpha = 0.05;
    int threads = 0;
};

struct SimulateArgs {
    std::string config;
    std::string out;
    std::vector<std::string> methods;
    int threads = 0;
};

struct BenchArgs {
    Index n = 30;
    std::vector<Index> q_grid{100, 200, 300, 400, 500, 600, 700, 800, 900, 1000};
    std::vector<Index> resamples{100, 500};
    double sparsity = 0.01;
    std::uint64_t seed = 1;
    std::string out;
    int threads = 0;
};

void setThreads(int threads) {
    if (threads < 0) throw InputError("--threads must be positive");
    if (threads > 0) omp_set_num_threads(threads);
}

void requireFile(const std::string& path) {
    if (!fs::is_regular_file(path)) throw InputError("input file '" + path + "' does not exist");
}

std::ofstream openOut(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path.string() + "'");
    return out;
}

struct Prepared {
    CsvDataset data;
    ObservationMatrix observations;
    DesignMatrix design;
};

Prepared prepare(const std::string& input, bool scale) {
    requireFile(input);
    Prepared p;
    p.data = ingestCsv(fs::path(input));
    for (const auto& w : p.data.warnings) std::cerr << "warning: " << w << '\n';
    p.observations = standardize(p.data.values, scale);
    if (!p.observations.constant_columns.empty())
        std::cerr << "warning: " << p.observations.constant_columns.size()
                  << " constant response column(s) kept centered at zero\n";
    p.design = buildDesign(p.data.labels);
    return p;
}

void printWhiteningTable(std::ostream& os, const std::vector<WhiteningCandidate>& table,
                         WhiteningKind chosen) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-10s %14s %6s %12s\n", "strategy", "statistic", "dof", "p-value");
    os << buf;
    for (const auto& c : table) {
        if (c.test)
            std::snprintf(buf, sizeof buf, "%-10s %14.4f %6lld %12.4g%s\n",
                          std::string(toString(c.kind)).c_str(), c.test->statistic,
                          static_cast<long long>(c.test->dof), c.test->pvalue,
                          c.kind == chosen ? "  *" : "");
        else
            std::snprintf(buf, sizeof buf, "%-10s failed: %s\n", std::string(toString(c.kind)).c_str(),
                          c.error.c_str());
        os << buf;
    }
}

int runSelect(const SelectArgs& args) {
    setThreads(args.threads);
    if (args.lags < 1) throw InputError("--H must be positive");
    const Index resamples = args.smoke ? 500 : args.resamples;
    if (resamples < 1) throw InputError("--resamples must be positive");
    PipelineOptions options;
    if (args.whitening != "auto") options.whitening = whiteningKindFromString(args.whitening);
    if (options.whitening == WhiteningKind::oracle)
        throw InputError("oracle whitening is only available in simulations");
    options.lags = args.lags;
    options.resamples = resamples;
    options.threshold = thresholdModeFromString(args.threshold);
    options.seed = args.seed;
    if (args.max_sweeps < 1) throw InputError("--max-sweeps must be positive");
    options.lasso.max_sweeps = args.max_sweeps;

    const fs::path outDir(args.out);
    fs::create_directories(outDir);
    const Prepared prep = prepare(args.input, args.scale);
    const PipelineResult result = runPipeline(prep.observations.values, prep.design, options);
    const auto& levels = prep.data.labels.levels;
    const auto& names = prep.data.response_names;

    {
        auto f = openOut(outDir / "whitening.csv");
        writeWhiteningCsv(f, result.whitening_table, result.whitening.kind);
    }
    {
        auto f = openOut(outDir / "frequencies.csv");
        writeFrequenciesCsv(f, result.stability.frequencies, levels, names);
    }
    {
        auto f = openOut(outDir / "support.csv");
        writeSupportCsv(f, result.threshold.support, levels, names);
    }
    {
        nlohmann::ordered_json j;
        j["version"] = kVersion;
        j["command"] = "select";
        j["input"] = fs::path(args.input).filename().string();
        j["config"] = {{"whitening", args.whitening},
                       {"H", args.lags},
                       {"resamples", resamples},
                       {"threshold", std::string(toString(options.threshold))},
                       {"seed", args.seed},
                       {"scale", args.scale},
                       {"cv_folds", options.cv_folds},
                       {"cv_grid_size", options.cv_grid_size},
                       {"cv_min_ratio", options.cv_min_ratio},
                       {"cv_patience", options.cv_patience},
                       {"max_sweeps", options.lasso.max_sweeps}};
        j["seed_streams"] = {{"folds", streams::folds}, {"resamples", streams::resamples}};
        j["dimensions"] = {{"n", prep.observations.values.rows()},
                           {"p", prep.design.levels()},
                           {"q", prep.observations.values.cols()}};
        j["levels"] = levels;
        j["constant_columns"] = prep.observations.constant_columns;
        j["whitening"] = {{"kind", std::string(toString(result.whitening.kind))},
                          {"phi1", result.whitening.phi1},
                          {"ridge", result.whitening.ridge},
                          {"pvalue", result.whitened_test.pvalue}};
        j["lambda_cv"] = result.cv.lambda_cv;
        j["lambda_max"] = result.cv.grid.front();
        j["stability"] = {{"resamples_used", result.stability.resamples},
                          {"resamples_failed", result.stability.failed}};
        j["threshold"] = result.threshold.threshold;
        if (!result.threshold.scores.empty()) {
            auto arr = nlohmann::ordered_json::array();
            for (const auto& s : result.threshold.scores)
                arr.push_back({{"threshold", s.threshold}, {"selected", s.selected}, {"pvalue", s.pvalue}});
            j["threshold_scores"] = arr;
        }
        std::vector<Index> perLevel(levels.size(), 0);
        for (const auto& s : result.threshold.support) ++perLevel[static_cast<std::size_t>(s.level)];
        nlohmann::ordered_json counts;
        for (std::size_t c = 0; c < levels.size(); ++c) counts[levels[c]] = perLevel[c];
        j["support_per_level"] = counts;
        j["support_size"] = result.threshold.support.size();
        auto f = openOut(outDir / "run.json");
        f << j.dump(2) << '\n';
    }

    std::cout << "whitening\n";
    printWhiteningTable(std::cout, result.whitening_table, result.whitening.kind);
    char buf[128];
    std::snprintf(buf, sizeof buf, "lambda_cv %.4g, threshold %.2f, %zu selected\n",
                  result.cv.lambda_cv, result.threshold.threshold, result.threshold.support.size());
    std::cout << buf;
    std::vector<Index> perLevel(levels.size(), 0);
    for (const auto& s : result.threshold.support) ++perLevel[static_cast<std::size_t>(s.level)];
    for (std::size_t c = 0; c < levels.size(); ++c)
        std::cout << "  " << levels[c] << ": " << perLevel[c] << '\n';
    return 0;
}

int runWhitenTest(const WhitenArgs& args) {
    setThreads(args.threads);
    const Prepared prep = prepare(args.input, args.scale);
    if (args.lags < 1 || args.lags >= prep.observations.values.cols())
        throw InputError("--H must satisfy 1 <= H < q = " +
                         std::to_string(prep.observations.values.cols()));
    const AnovaFit fit = fitAnova(prep.observations.values, prep.design);
    const WhiteningSelection sel = selectWhitening(fit.residuals, args.lags);
    printWhiteningTable(std::cout, sel.table, sel.op.kind);
    if (!args.out.empty()) {
        auto f = openOut(args.out);
        writeWhiteningCsv(f, sel.table, sel.op.kind);
    }
    const double identityP = sel.table.front().test->pvalue;
    const bool rejected = identityP < args.alpha;
    std::cout << (rejected ? "identity rejected" : "identity not rejected") << " at alpha "
              << args.alpha << '\n';
    return rejected ? kExitRejected : 0;
}

int runSimulate(const SimulateArgs& args) {
    setThreads(args.threads);
    requireFile(args.config);
    std::ifstream in(args.config);
    std::stringstream ss;
    ss << in.rdbuf();
    const SimulationConfig cfg = simulationConfigFromJson(ss.str());
    std::vector<Method> methods;
    for (const auto& m : args.methods) methods.push_back(methodFromString(m));
    if (methods.empty()) methods = allMethods();

    const auto records = runComparison(cfg, methods);
    if (args.out.empty()) {
        writeComparisonCsv(std::cout, records);
    } else {
        auto f = openOut(args.out);
        writeComparisonCsv(f, records);
    }
    for (const auto& s : summarize(records)) {
        char buf[200];
        std::snprintf(buf, sizeof buf, "%-18s AUC %.4f +- %.4f  p-value %.4f +- %.4f  time %.4f s\n",
                      std::string(toString(s.method)).c_str(), s.auc_mean, s.auc_sd,
                      s.pvalue_mean, s.pvalue_sd, s.seconds_mean);
        std::cerr << buf;
    }
    return 0;
}

int runBench(const BenchArgs& args) {
    setThreads(args.threads);
    const auto rows = timingBenchmark(args.n, args.q_grid, args.sparsity, args.resamples, args.seed);
    if (args.out.empty()) {
        writeTimingCsv(std::cout, rows);
    } else {
        auto f = openOut(args.out);
        writeTimingCsv(f, rows);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multivariate variable selection with whitened Lasso and stability selection"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    SelectArgs sel;
    auto* select = app.add_subcommand("select", "run the full selection pipeline on a CSV file");
    select->add_option("--input", sel.input, "input CSV")->required();
    select->add_option("--out", sel.out, "output directory")->required();
    select->add_option("--whitening", sel.whitening, "auto|identity|ar1|nonparam")
        ->check(CLI::IsMember({"auto", "identity", "ar1", "nonparam", "nonparametric"}));
    select->add_option("--H", sel.lags, "portmanteau lag count");
    select->add_option("--resamples", sel.resamples, "stability-selection resamples");
    select->add_flag("--smoke", sel.smoke, "use 500 resamples");
    select->add_option("--threshold", sel.threshold, "one|maxpval")
        ->check(CLI::IsMember({"one", "maxpval"}));
    select->add_option("--seed", sel.seed, "root random seed");
    select->add_flag("--scale", sel.scale, "scale columns to unit variance");
    select->add_option("--threads", sel.threads, "worker thread cap");
    select->add_option("--max-sweeps", sel.max_sweeps, "coordinate-descent sweep cap per solve");

    WhitenArgs wt;
    auto* whiten = app.add_subcommand("whiten-test", "residual whitening test only");
    whiten->add_option("--input", wt.input, "input CSV")->required();
    whiten->add_option("--out", wt.out, "optional whitening.csv path");
    whiten->add_option("--H", wt.lags, "portmanteau lag count");
    whiten->add_flag("--scale", wt.scale, "scale columns to unit variance");
    whiten->add_option("--alpha", wt.alpha, "test level");
    whiten->add_option("--threads", wt.threads, "worker thread cap");

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "synthetic method comparison");
    simulate->add_option("--config", sim.config, "flat JSON simulation config")->required();
    simulate->add_option("--out", sim.out, "tidy CSV output (stdout if omitted)");
    simulate->add_option("--methods", sim.methods,
                         "subset of raw-lasso, ar1-whitened, nonparam-whitened, oracle-whitened")
        ->delimiter(',');
    simulate->add_option("--threads", sim.threads, "worker thread cap");

    BenchArgs bench;
    auto* benchCmd = app.add_subcommand("bench", "end-to-end timing over q and resample counts");
    benchCmd->add_option("--n", bench.n, "samples");
    benchCmd->add_option("--q", bench.q_grid, "response counts")->delimiter(',');
    benchCmd->add_option("--resamples", bench.resamples, "resample counts")->delimiter(',');
    benchCmd->add_option("--sparsity", bench.sparsity, "fraction of nonzero coefficients");
    benchCmd->add_option("--seed", bench.seed, "root random seed");
    benchCmd->add_option("--out", bench.out, "CSV output (stdout if omitted)");
    benchCmd->add_option("--threads", bench.threads, "worker thread cap");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitInput;
    }

    try {
        if (*select) return runSelect(sel);
        if (*whiten) return runWhitenTest(wt);
        if (*simulate) return runSimulate(sim);
        if (*benchCmd) return runBench(bench);
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const ConvergenceError& e) {
        std::cerr << "non-convergence: " << e.what() << '\n';
        return kExitConvergence;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitInput;
    }
    return 0;
}
