#include "detail.hpp"
#include "mvsel/errors.hpp"
#include "mvsel/selection.hpp"

namespace mvsel {

namespace detail {

Matrix fittedMeansTransposed(const Matrix& coefficients, const Matrix& operatorRows,
                             Index bandwidth) {
    const Index p = coefficients.rows();
    const Index q = coefficients.cols();
    Matrix fitted = Matrix::Zero(q, p);
    for (Index k = 0; k < q; ++k) {
        const Index len = std::min<Index>(q, k + bandwidth + 1) - k;
        const auto srow = operatorRows.col(k).segment(k, len);
        for (Index c = 0; c < p; ++c) {
            const double b = coefficients(c, k);
            if (b != 0.0) fitted.col(c).segment(k, len) += b * srow;
        }
    }
    return fitted;
}

}  // namespace detail

VectorizedProblem vectorize(const Matrix& whitened, const DesignMatrix& design,
                            const WhiteningOperator& op) {
    if (whitened.rows() != design.rows())
        throw InputError("whitened data has " + std::to_string(whitened.rows()) +
                         " rows, design has " + std::to_string(design.rows()));
    if (whitened.cols() != op.dim())
        throw InputError("whitened data has " + std::to_string(whitened.cols()) +
                         " columns, operator dimension is " + std::to_string(op.dim()));
    VectorizedProblem problem;
    problem.n = whitened.rows();
    problem.p = design.levels();
    problem.q = whitened.cols();
    problem.response = Eigen::Map<const Vector>(whitened.data(), whitened.size());
    problem.design = design;
    problem.whitening = op;
    problem.operator_rows = op.matrix.transpose();
    return problem;
}

Vector kroneckerMatvec(const VectorizedProblem& problem, const Vector& v) {
    const Index n = problem.n, p = problem.p, q = problem.q;
    if (v.size() != p * q)
        throw InputError("coefficient vector has length " + std::to_string(v.size()) +
                         ", expected " + std::to_string(p * q));
    const Eigen::Map<const Matrix> coef(v.data(), p, q);
    const Matrix fitted =
        detail::fittedMeansTransposed(coef, problem.operator_rows, problem.whitening.bandwidth);
    Vector out(n * q);
    for (Index m = 0; m < q; ++m)
        for (Index i = 0; i < n; ++i)
            out(m * n + i) = fitted(m, problem.design.level_of_row[static_cast<std::size_t>(i)]);
    return out;
}

Vector kroneckerTransposeMatvec(const VectorizedProblem& problem, const Vector& r) {
    const Index n = problem.n, p = problem.p, q = problem.q;
    if (r.size() != n * q)
        throw InputError("response vector has length " + std::to_string(r.size()) +
                         ", expected " + std::to_string(n * q));
    // Level sums X'R, stored q x p.
    Matrix sums = Matrix::Zero(q, p);
    for (Index m = 0; m < q; ++m)
        for (Index i = 0; i < n; ++i)
            sums(m, problem.design.level_of_row[static_cast<std::size_t>(i)]) += r(m * n + i);
    Vector out(p * q);
    const Index bw = problem.whitening.bandwidth;
    for (Index k = 0; k < q; ++k) {
        const Index len = std::min<Index>(q, k + bw + 1) - k;
        const auto srow = problem.operator_rows.col(k).segment(k, len);
        for (Index c = 0; c < p; ++c) out(k * p + c) = srow.dot(sums.col(c).segment(k, len));
    }
    return out;
}

Matrix materializeDesign(const VectorizedProblem& problem, std::size_t budgetBytes) {
    const Index n = problem.n, p = problem.p, q = problem.q;
    const double bytes = static_cast<double>(n) * q * p * q * sizeof(double);
    if (bytes > static_cast<double>(budgetBytes))
        throw InputError("materialized Kronecker design would need " +
                         std::to_string(static_cast<long long>(bytes)) + " bytes");
    const Matrix& s = problem.whitening.matrix;
    Matrix a = Matrix::Zero(n * q, p * q);
    for (Index k = 0; k < q; ++k)
        for (Index i = 0; i < n; ++i) {
            const Index c = problem.design.level_of_row[static_cast<std::size_t>(i)];
            for (Index m = 0; m < q; ++m) a(m * n + i, k * p + c) = s(k, m);
        }
    return a;
}

AggregatedProblem aggregate(const VectorizedProblem& problem) {
    AggregatedProblem agg;
    agg.p = problem.p;
    agg.q = problem.q;
    agg.operator_rows = &problem.operator_rows;
    agg.bandwidth = problem.whitening.bandwidth;
    agg.counts = Matrix::Zero(problem.q, problem.p);
    agg.sums = Matrix::Zero(problem.q, problem.p);
    for (Index m = 0; m < problem.q; ++m)
        for (Index i = 0; i < problem.n; ++i) {
            const Index c = problem.design.level_of_row[static_cast<std::size_t>(i)];
            const double y = problem.response(m * problem.n + i);
            agg.counts(m, c) += 1.0;
            agg.sums(m, c) += y;
        }
    agg.sum_squares = problem.response.squaredNorm();
    return agg;
}

AggregatedProblem aggregate(const VectorizedProblem& problem, std::span<const Index> elements) {
    AggregatedProblem agg;
    agg.p = problem.p;
    agg.q = problem.q;
    agg.operator_rows = &problem.operator_rows;
    agg.bandwidth = problem.whitening.bandwidth;
    agg.counts = Matrix::Zero(problem.q, problem.p);
    agg.sums = Matrix::Zero(problem.q, problem.p);
    const Index total = problem.elementCount();
    double ss = 0.0;
    for (Index e : elements) {
        if (e < 0 || e >= total) throw InputError("element index out of range");
        const Index m = e / problem.n;
        const Index i = e % problem.n;
        const Index c = problem.design.level_of_row[static_cast<std::size_t>(i)];
        const double y = problem.response(e);
        agg.counts(m, c) += 1.0;
        agg.sums(m, c) += y;
        ss += y * y;
    }
    agg.sum_squares = ss;
    return agg;
}

double heldOutSquaredError(const VectorizedProblem& problem, const Vector& beta,
                           std::span<const Index> elements) {
    if (beta.size() != problem.coefficientCount()) throw InputError("coefficient length mismatch");
    const Eigen::Map<const Matrix> coef(beta.data(), problem.p, problem.q);
    const Matrix fitted =
        detail::fittedMeansTransposed(coef, problem.operator_rows, problem.whitening.bandwidth);
    double sse = 0.0;
    for (Index e : elements) {
        const Index m = e / problem.n;
        const Index i = e % problem.n;
        const double r =
            problem.response(e) - fitted(m, problem.design.level_of_row[static_cast<std::size_t>(i)]);
        sse += r * r;
    }
    return sse;
}

}  // namespace mvsel
