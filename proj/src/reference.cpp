#include "mvsel/reference.hpp"

#include "mvsel/errors.hpp"
#include "mvsel/rng.hpp"

namespace mvsel::reference {

Autocovariance pooledAutocovariance(const Matrix& residuals, Index maxLag) {
    const Index n = residuals.rows();
    const Index q = residuals.cols();
    if (maxLag < 0 || maxLag >= q) throw InputError("maximum lag must be below q");
    Autocovariance out;
    out.gamma.assign(static_cast<std::size_t>(maxLag + 1), 0.0);
    for (Index h = 0; h <= maxLag; ++h) {
        double pooled = 0.0;
        for (Index i = 0; i < n; ++i) {
            double s = 0.0;
            for (Index t = 0; t + h < q; ++t) s += residuals(i, t) * residuals(i, t + h);
            pooled += s / static_cast<double>(q);
        }
        out.gamma[static_cast<std::size_t>(h)] = pooled / static_cast<double>(n);
    }
    return out;
}

Matrix applyWhitening(const Matrix& m, const WhiteningOperator& op) {
    if (m.cols() != op.dim()) throw InputError("dimension mismatch");
    Matrix out = Matrix::Zero(m.rows(), m.cols());
    for (Index i = 0; i < m.rows(); ++i)
        for (Index col = 0; col < m.cols(); ++col) {
            double s = 0.0;
            for (Index k = 0; k < m.cols(); ++k) s += m(i, k) * op.matrix(k, col);
            out(i, col) = s;
        }
    return out;
}

double portmanteauStatistic(const Matrix& residuals, Index lags) {
    const Index q = residuals.cols();
    double total = 0.0;
    for (Index i = 0; i < residuals.rows(); ++i) {
        double g0 = 0.0;
        for (Index t = 0; t < q; ++t) g0 += residuals(i, t) * residuals(i, t);
        for (Index h = 1; h <= lags; ++h) {
            double gh = 0.0;
            for (Index t = 0; t + h < q; ++t) gh += residuals(i, t) * residuals(i, t + h);
            total += static_cast<double>(q) * (gh / g0) * (gh / g0);
        }
    }
    return total;
}

Eigen::MatrixXi stabilityCounts(const VectorizedProblem& problem, double lambda,
                                const StabilityOptions& options) {
    const LassoSolution full = lassoSolve(problem, lambda, nullptr, options.lasso);
    Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(problem.p, problem.q);
    for (Index r = 0; r < options.resamples; ++r) {
        const auto elements = halfSubsample(
            problem.elementCount(),
            deriveSeed(options.seed, streams::resamples, static_cast<std::uint64_t>(r)));
        const AggregatedProblem agg = aggregate(problem, elements);
        const LassoSolution sol = lassoSolve(agg, lambda, &full.beta, options.lasso);
        for (Index j = 0; j < sol.beta.size(); ++j)
            if (sol.beta(j) != 0.0) ++counts(j % problem.p, j / problem.p);
    }
    return counts;
}

}  // namespace mvsel::reference
