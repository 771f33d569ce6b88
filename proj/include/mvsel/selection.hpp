#pragma once

#include "mvsel/linmodel.hpp"
#include "mvsel/whitening.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mvsel {

/**
 * Whitened, vectorized regression vec(Y S) = (S' kron X) vec(B) + noise.
 *
 * Element e of the response corresponds to (row i, column m) of Y S with
 * e = m * n + i; coefficient j corresponds to (level c, response k) of B
 * with j = k * p + c. The Kronecker design is kept in factored form.
 */
struct VectorizedProblem {
    Vector response;
    DesignMatrix design;
    WhiteningOperator whitening;
    Matrix operator_rows;  ///< S' stored column-major, so column k is row k of S
    Index n = 0;
    Index p = 0;
    Index q = 0;

    [[nodiscard]] Index elementCount() const { return n * q; }
    [[nodiscard]] Index coefficientCount() const { return p * q; }
};

VectorizedProblem vectorize(const Matrix& whitened, const DesignMatrix& design,
                            const WhiteningOperator& op);

/// (S' kron X) v, computed as vec(X V S) with V the p x q reshape of v.
Vector kroneckerMatvec(const VectorizedProblem& problem, const Vector& v);

/// (S' kron X)' r = (S kron X') r, computed as vec(X' R S').
Vector kroneckerTransposeMatvec(const VectorizedProblem& problem, const Vector& r);

/// Explicit nq x pq design. Throws InputError when it would exceed `budgetBytes`.
Matrix materializeDesign(const VectorizedProblem& problem,
                         std::size_t budgetBytes = std::size_t{1} << 28);

/**
 * Sufficient statistics of the vectorized problem restricted to a subset of
 * response elements. Because X is a one-way indicator design, everything the
 * coordinate descent needs collapses onto q x p arrays:
 *   counts(m, c) = #{ i in level c : (i, m) in subset }
 *   sums(m, c)   = sum of y(i, m) over the same elements
 */
struct AggregatedProblem {
    Matrix counts;
    Matrix sums;
    double sum_squares = 0.0;
    const Matrix* operator_rows = nullptr;  ///< borrowed from the VectorizedProblem
    Index bandwidth = 0;
    Index p = 0;
    Index q = 0;
};

AggregatedProblem aggregate(const VectorizedProblem& problem);
AggregatedProblem aggregate(const VectorizedProblem& problem, std::span<const Index> elements);

struct LassoOptions {
    double coefficient_tolerance = 1e-7;  ///< relative to max(1, |beta|_inf)
    double kkt_tolerance = 1e-6;
    Index max_sweeps = 100000;
    std::vector<double>* objective_trace = nullptr;  ///< criterion after every sweep when set
};

struct LassoSolution {
    Vector beta;
    double lambda = 0.0;
    double objective = 0.0;
    Index iterations = 0;
    double kkt_gap = 0.0;

    [[nodiscard]] Index nonzeros() const;
};

/// 2 |X' y|_inf: the smallest penalty with an all-zero solution.
double lambdaMax(const AggregatedProblem& problem);
double lambdaMax(const VectorizedProblem& problem);
double lambdaMaxDense(const Matrix& design, const Vector& response);

/**
 * Cyclic coordinate descent on |y - X b|_2^2 + lambda |b|_1.
 * Throws ConvergenceError after `max_sweeps` sweeps.
 */
LassoSolution lassoSolve(const AggregatedProblem& problem, double lambda,
                         const Vector* warmStart = nullptr, const LassoOptions& options = {});
LassoSolution lassoSolve(const VectorizedProblem& problem, double lambda,
                         const Vector* warmStart = nullptr, const LassoOptions& options = {});
LassoSolution lassoSolveDense(const Matrix& design, const Vector& response, double lambda,
                              const Vector* warmStart = nullptr, const LassoOptions& options = {});

/// Largest KKT violation of beta for the criterion above, evaluated on a dense design.
double kktGapDense(const Matrix& design, const Vector& response, const Vector& beta, double lambda);

/// Held-out squared error of beta on the listed elements.
double heldOutSquaredError(const VectorizedProblem& problem, const Vector& beta,
                           std::span<const Index> elements);

struct CrossValidationOptions {
    Index folds = 10;
    Index grid_size = 100;
    double min_ratio = 1e-3;
    std::uint64_t seed = 42;
    /// Stop descending the grid once the mean held-out error has stayed above
    /// its running minimum for this many consecutive points; 0 walks the whole grid.
    Index patience = 10;
    LassoOptions lasso;
};

struct CrossValidationResult {
    double lambda_cv = 0.0;
    Index best_index = 0;
    std::vector<double> grid;        ///< decreasing
    std::vector<double> mean_error;  ///< mean over folds of the held-out MSE, per evaluated point
    Index evaluated = 0;             ///< grid points actually fitted
};

/// Log-spaced grid from lambdaMax down to lambdaMax * minRatio.
std::vector<double> lambdaGrid(double lambdaMax, Index size, double minRatio);

/// Seeded partition of 0..count-1 into `folds` groups of near-equal size.
std::vector<std::vector<Index>> foldPartition(Index count, Index folds, std::uint64_t seed);

CrossValidationResult crossValidateLambda(const VectorizedProblem& problem,
                                          const CrossValidationOptions& options);
CrossValidationResult crossValidateLambda(const VectorizedProblem& problem,
                                          const std::vector<double>& grid,
                                          const CrossValidationOptions& options);

struct SelectedCoefficient {
    Index level = 0;
    Index response = 0;
    double frequency = 0.0;
};

struct StabilityOptions {
    Index resamples = 5000;
    std::uint64_t seed = 42;
    double max_failure_fraction = 0.01;
    LassoOptions lasso;
};

struct StabilityReport {
    Matrix frequencies;  ///< p x q
    double lambda_cv = 0.0;
    Index resamples = 0;
    Index failed = 0;
    double threshold = 1.0;
    std::vector<SelectedCoefficient> support;
};

/// Draws floor(count / 2) distinct element indices; deterministic in `seed`.
std::vector<Index> halfSubsample(Index count, std::uint64_t seed);

StabilityReport stabilitySelect(const VectorizedProblem& problem, double lambdaCv,
                                const StabilityOptions& options);

/// Coefficients with frequency >= threshold, ordered by (response, level).
std::vector<SelectedCoefficient> supportAt(const Matrix& frequencies, double threshold);

enum class ThresholdMode { fixed_one, max_pvalue };

std::string_view toString(ThresholdMode mode);
ThresholdMode thresholdModeFromString(std::string_view name);

struct ThresholdContext {
    const Matrix& y;
    const DesignMatrix& design;
    const WhiteningOperator& whitening;
    Index lags = 10;
};

struct ThresholdScore {
    double threshold = 0.0;
    Index selected = 0;
    double pvalue = 0.0;
};

struct ThresholdChoice {
    double threshold = 1.0;
    std::vector<SelectedCoefficient> support;
    std::vector<ThresholdScore> scores;  ///< max-pvalue mode only
};

/// Candidate thresholds 0.50, 0.55, ..., 1.00.
std::vector<double> thresholdGrid();

/// Picks the final threshold and stores it together with the support in `report`.
ThresholdChoice chooseThreshold(StabilityReport& report, ThresholdMode mode,
                                const ThresholdContext& context);

}  // namespace mvsel
