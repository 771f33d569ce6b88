#pragma once

#include "mvsel/linmodel.hpp"
#include "mvsel/pipeline.hpp"
#include "mvsel/rng.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mvsel {

struct SimulationConfig {
    Index n = 30;
    Index p = 3;
    Index q = 1000;
    double phi1 = 0.9;
    double sigma = 1.0;
    double sparsity = 0.01;
    double kappa = 1.0;
    Index replicates = 1;
    std::uint64_t seed = 1;
    Index resamples = 500;
    Index lags = 10;

    /// Throws InputError when a field is out of range.
    void validate() const;
};

struct SimulatedDataset {
    Matrix y;
    Matrix noise;
    FactorLabels labels;
    DesignMatrix design;
    Matrix coefficients;  ///< p x q true B
};

/// Stationary AR(1) rows started from N(0, sigma^2 / (1 - phi^2)).
Matrix simulateAr1Rows(Index rows, Index cols, double phi1, double sigma, Rng& rng);

SimulatedDataset generateDataset(const SimulationConfig& config, Index replicate);

struct RocCurve {
    std::vector<std::pair<double, double>> points;  ///< (FPR, TPR) from (0,0) to (1,1)
    double auc = 0.0;
};

RocCurve rocFromFrequencies(const Matrix& scores, const Matrix& truth);

enum class Method { raw_lasso, ar1_whitened, nonparam_whitened, oracle_whitened };

std::string_view toString(Method method);
Method methodFromString(std::string_view name);
std::vector<Method> allMethods();

struct ComparisonRecord {
    Index replicate = 0;
    Method method = Method::raw_lasso;
    double auc = 0.0;
    double pvalue = 0.0;
    double seconds = 0.0;
    double lambda_cv = 0.0;
    Index false_positives_one = 0;  ///< at threshold 1
    Index true_positives_one = 0;
    double threshold_maxp = 1.0;  ///< threshold picked by the max-pvalue rule
    Index false_positives_maxp = 0;
    Index true_positives_maxp = 0;
};

struct MethodSummary {
    Method method = Method::raw_lasso;
    double auc_mean = 0.0, auc_sd = 0.0;
    double pvalue_mean = 0.0, pvalue_sd = 0.0;
    double seconds_mean = 0.0, seconds_sd = 0.0;
};

/// Runs the pipeline for one method on one dataset and scores it against the truth.
ComparisonRecord evaluateMethod(const SimulatedDataset& data, const SimulationConfig& config,
                                Method method, Index replicate);

/// Replicates run concurrently; records come back ordered by (replicate, method).
std::vector<ComparisonRecord> runComparison(const SimulationConfig& config,
                                            const std::vector<Method>& methods);

std::vector<MethodSummary> summarize(const std::vector<ComparisonRecord>& records);

/// Tidy CSV: replicate,method,metric,value.
void writeComparisonCsv(std::ostream& out, const std::vector<ComparisonRecord>& records);

struct TimingRow {
    Index q = 0;
    Index resamples = 0;
    double seconds = 0.0;
};

std::vector<TimingRow> timingBenchmark(Index n, const std::vector<Index>& qGrid, double sparsity,
                                       const std::vector<Index>& resampleCounts,
                                       std::uint64_t seed = 1);

void writeTimingCsv(std::ostream& out, const std::vector<TimingRow>& rows);

SimulationConfig simulationConfigFromJson(const std::string& text);

}  // namespace mvsel
