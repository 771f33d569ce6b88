#include "mvsel/simulate.hpp"

#include "mvsel/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <ostream>

namespace mvsel {

void SimulationConfig::validate() const {
    if (n < 1 || p < 1 || q < 2) throw InputError("simulation dimensions must be positive (q >= 2)");
    if (n < p) throw InputError("simulation needs at least one sample per level");
    if (!(sparsity > 0.0 && sparsity <= 1.0)) throw InputError("sparsity must lie in (0, 1]");
    if (!(std::fabs(phi1) < 1.0)) throw InputError("phi1 must lie in (-1, 1)");
    if (!(sigma > 0.0)) throw InputError("sigma must be positive");
    if (!(kappa >= 0.0)) throw InputError("kappa must be non-negative");
    if (replicates < 1 || resamples < 1) throw InputError("replicates and resamples must be positive");
    if (lags < 1 || lags >= q) throw InputError("lags must satisfy 1 <= H < q");
}

Matrix simulateAr1Rows(Index rows, Index cols, double phi1, double sigma, Rng& rng) {
    std::normal_distribution<double> z(0.0, 1.0);
    const double sd0 = sigma / std::sqrt(1.0 - phi1 * phi1);
    Matrix e(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        e(i, 0) = sd0 * z(rng);
        for (Index t = 1; t < cols; ++t) e(i, t) = phi1 * e(i, t - 1) + sigma * z(rng);
    }
    return e;
}

SimulatedDataset generateDataset(const SimulationConfig& config, Index replicate) {
    config.validate();
    const Index n = config.n, p = config.p, q = config.q;
    Rng rng(deriveSeed(config.seed, streams::datasets, static_cast<std::uint64_t>(replicate)));

    // Balanced one-way design; any remainder goes to the first levels.
    std::vector<std::string> labels;
    for (Index c = 0; c < p; ++c) {
        const Index size = n / p + (c < n % p ? 1 : 0);
        for (Index r = 0; r < size; ++r) labels.push_back("L" + std::to_string(c + 1));
    }

    SimulatedDataset data;
    data.labels = FactorLabels::fromLabels(std::move(labels));
    data.design = buildDesign(data.labels);

    const Index total = p * q;
    const Index active = std::max<Index>(1, static_cast<Index>(std::floor(config.sparsity * static_cast<double>(total))));
    std::vector<Index> pool(static_cast<std::size_t>(total));
    std::iota(pool.begin(), pool.end(), Index{0});
    for (Index t = 0; t < active; ++t) {
        std::uniform_int_distribution<Index> pick(t, total - 1);
        std::swap(pool[static_cast<std::size_t>(t)], pool[static_cast<std::size_t>(pick(rng))]);
    }
    data.coefficients = Matrix::Zero(p, q);
    for (Index t = 0; t < active; ++t) {
        const Index j = pool[static_cast<std::size_t>(t)];
        data.coefficients(j % p, j / p) = config.kappa;
    }

    data.noise = simulateAr1Rows(n, q, config.phi1, config.sigma, rng);
    data.y = data.design.values * data.coefficients + data.noise;
    return data;
}

RocCurve rocFromFrequencies(const Matrix& scores, const Matrix& truth) {
    if (scores.rows() != truth.rows() || scores.cols() != truth.cols())
        throw InputError("score and truth matrices differ in shape");
    const Index total = scores.size();
    const Index positives = (truth.array() != 0.0).count();
    const Index negatives = total - positives;
    if (positives == 0) throw InputError("true coefficient matrix is all zero; AUC is undefined");
    if (negatives == 0) throw InputError("true coefficient matrix has no zero entries; FPR is undefined");

    std::vector<Index> order(static_cast<std::size_t>(total));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return scores(a) > scores(b); });

    RocCurve roc;
    roc.points.emplace_back(0.0, 0.0);
    Index tp = 0, fp = 0;
    for (std::size_t t = 0; t < order.size();) {
        const double v = scores(order[t]);
        while (t < order.size() && scores(order[t]) == v) {
            if (truth(order[t]) != 0.0) ++tp; else ++fp;
            ++t;
        }
        roc.points.emplace_back(static_cast<double>(fp) / static_cast<double>(negatives),
                                static_cast<double>(tp) / static_cast<double>(positives));
    }
    for (std::size_t t = 1; t < roc.points.size(); ++t) {
        const auto [x0, y0] = roc.points[t - 1];
        const auto [x1, y1] = roc.points[t];
        roc.auc += (x1 - x0) * 0.5 * (y0 + y1);
    }
    return roc;
}

std::string_view toString(Method method) {
    switch (method) {
        case Method::raw_lasso: return "raw-lasso";
        case Method::ar1_whitened: return "ar1-whitened";
        case Method::nonparam_whitened: return "nonparam-whitened";
        case Method::oracle_whitened: return "oracle-whitened";
    }
    return "unknown";
}

Method methodFromString(std::string_view name) {
    for (Method m : allMethods())
        if (toString(m) == name) return m;
    throw InputError("unknown method '" + std::string(name) + "'");
}

std::vector<Method> allMethods() {
    return {Method::raw_lasso, Method::ar1_whitened, Method::nonparam_whitened,
            Method::oracle_whitened};
}

ComparisonRecord evaluateMethod(const SimulatedDataset& data, const SimulationConfig& config,
                                Method method, Index replicate) {
    PipelineOptions options;
    options.lags = config.lags;
    options.resamples = config.resamples;
    options.seed = deriveSeed(config.seed, streams::resamples, static_cast<std::uint64_t>(replicate));
    switch (method) {
        case Method::raw_lasso: options.whitening = WhiteningKind::identity; break;
        case Method::ar1_whitened: options.whitening = WhiteningKind::ar1; break;
        case Method::nonparam_whitened: options.whitening = WhiteningKind::nonparametric; break;
        case Method::oracle_whitened: {
            WhiteningOperator op = ar1InverseSqrt(config.phi1, config.q);
            op.kind = WhiteningKind::oracle;
            options.fixed_operator = std::move(op);
            break;
        }
    }

    const auto start = std::chrono::steady_clock::now();
    const PipelineResult result = runPipeline(data.y, data.design, options);
    const auto stop = std::chrono::steady_clock::now();

    ComparisonRecord rec;
    rec.replicate = replicate;
    rec.method = method;
    rec.seconds = std::chrono::duration<double>(stop - start).count();
    rec.pvalue = result.whitened_test.pvalue;
    rec.lambda_cv = result.cv.lambda_cv;
    rec.auc = rocFromFrequencies(result.stability.frequencies, data.coefficients).auc;
    for (const auto& s : supportAt(result.stability.frequencies, 1.0)) {
        if (data.coefficients(s.level, s.response) != 0.0) ++rec.true_positives_one;
        else ++rec.false_positives_one;
    }
    StabilityReport report = result.stability;
    const ThresholdContext context{data.y, data.design, result.whitening, config.lags};
    const ThresholdChoice maxp = chooseThreshold(report, ThresholdMode::max_pvalue, context);
    rec.threshold_maxp = maxp.threshold;
    for (const auto& s : maxp.support) {
        if (data.coefficients(s.level, s.response) != 0.0) ++rec.true_positives_maxp;
        else ++rec.false_positives_maxp;
    }
    return rec;
}

std::vector<ComparisonRecord> runComparison(const SimulationConfig& config,
                                            const std::vector<Method>& methods) {
    config.validate();
    const auto nMethods = static_cast<Index>(methods.size());
    std::vector<ComparisonRecord> records(static_cast<std::size_t>(config.replicates * nMethods));
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1)
    for (Index r = 0; r < config.replicates; ++r) {
        try {
            const SimulatedDataset data = generateDataset(config, r);
            for (Index m = 0; m < nMethods; ++m)
                records[static_cast<std::size_t>(r * nMethods + m)] =
                    evaluateMethod(data, config, methods[static_cast<std::size_t>(m)], r);
        } catch (...) {
#pragma omp critical(mvsel_comparison_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return records;
}

namespace {

std::pair<double, double> meanSd(const std::vector<double>& v) {
    if (v.empty()) return {0.0, 0.0};
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (v.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

}  // namespace

std::vector<MethodSummary> summarize(const std::vector<ComparisonRecord>& records) {
    std::vector<MethodSummary> out;
    for (Method m : allMethods()) {
        std::vector<double> auc, pv, sec;
        for (const auto& r : records)
            if (r.method == m) {
                auc.push_back(r.auc);
                pv.push_back(r.pvalue);
                sec.push_back(r.seconds);
            }
        if (auc.empty()) continue;
        MethodSummary s;
        s.method = m;
        std::tie(s.auc_mean, s.auc_sd) = meanSd(auc);
        std::tie(s.pvalue_mean, s.pvalue_sd) = meanSd(pv);
        std::tie(s.seconds_mean, s.seconds_sd) = meanSd(sec);
        out.push_back(s);
    }
    return out;
}

void writeComparisonCsv(std::ostream& out, const std::vector<ComparisonRecord>& records) {
    out << "replicate,method,metric,value\n";
    const auto old = out.precision(17);
    for (const auto& r : records) {
        const auto row = [&](std::string_view metric, double value) {
            out << r.replicate << ',' << toString(r.method) << ',' << metric << ',' << value << '\n';
        };
        row("auc", r.auc);
        row("pvalue", r.pvalue);
        row("seconds", r.seconds);
        row("lambda_cv", r.lambda_cv);
        row("tp_threshold_one", static_cast<double>(r.true_positives_one));
        row("fp_threshold_one", static_cast<double>(r.false_positives_one));
        row("threshold_maxpval", r.threshold_maxp);
        row("tp_threshold_maxpval", static_cast<double>(r.true_positives_maxp));
        row("fp_threshold_maxpval", static_cast<double>(r.false_positives_maxp));
    }
    out.precision(old);
}

std::vector<TimingRow> timingBenchmark(Index n, const std::vector<Index>& qGrid, double sparsity,
                                       const std::vector<Index>& resampleCounts,
                                       std::uint64_t seed) {
    std::vector<TimingRow> rows;
    for (Index q : qGrid) {
        SimulationConfig cfg;
        cfg.n = n;
        cfg.q = q;
        cfg.sparsity = sparsity;
        cfg.seed = seed;
        const SimulatedDataset data = generateDataset(cfg, 0);
        for (Index resamples : resampleCounts) {
            PipelineOptions options;
            options.resamples = resamples;
            options.seed = seed;
            options.lags = std::min<Index>(10, q - 1);
            const auto start = std::chrono::steady_clock::now();
            (void)runPipeline(data.y, data.design, options);
            const auto stop = std::chrono::steady_clock::now();
            rows.push_back({q, resamples, std::chrono::duration<double>(stop - start).count()});
        }
    }
    return rows;
}

void writeTimingCsv(std::ostream& out, const std::vector<TimingRow>& rows) {
    out << "q,resamples,seconds\n";
    const auto old = out.precision(6);
    for (const auto& r : rows) out << r.q << ',' << r.resamples << ',' << r.seconds << '\n';
    out.precision(old);
}

SimulationConfig simulationConfigFromJson(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("simulation config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw InputError("simulation config must be a JSON object");
    SimulationConfig cfg;
    try {
        for (auto it = j.begin(); it != j.end(); ++it) {
            const std::string& key = it.key();
            if (key == "n") cfg.n = it->get<Index>();
            else if (key == "p") cfg.p = it->get<Index>();
            else if (key == "q") cfg.q = it->get<Index>();
            else if (key == "phi1") cfg.phi1 = it->get<double>();
            else if (key == "sigma") cfg.sigma = it->get<double>();
            else if (key == "sparsity") cfg.sparsity = it->get<double>();
            else if (key == "kappa") cfg.kappa = it->get<double>();
            else if (key == "replicates" || key == "nReplicates") cfg.replicates = it->get<Index>();
            else if (key == "seed") cfg.seed = it->get<std::uint64_t>();
            else if (key == "resamples" || key == "nResamples") cfg.resamples = it->get<Index>();
            else if (key == "lags" || key == "H") cfg.lags = it->get<Index>();
            else throw InputError("unknown simulation config field '" + key + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("bad simulation config value: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

}  // namespace mvsel
