#include "detail.hpp"
#include "mvsel/errors.hpp"
#include "mvsel/selection.hpp"

#include <cmath>
#include <sstream>

namespace mvsel {

namespace {

double softThreshold(double z, double t) {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

double kktViolation(double gradient, double beta, double lambda) {
    // gradient here is 2 X_j'(y - X b)
    if (beta != 0.0) return std::fabs(gradient - lambda * (beta > 0.0 ? 1.0 : -1.0));
    return std::max(0.0, std::fabs(gradient) - lambda);
}

[[noreturn]] void throwNoConvergence(Index sweeps, double lastChange, double gap, double lambda) {
    std::ostringstream msg;
    msg << "lasso did not converge after " << sweeps << " sweeps (lambda " << lambda
        << ", last max change " << lastChange << ", KKT gap " << gap << ")";
    throw ConvergenceError(msg.str());
}

/**
 * Shared driver: alternate full sweeps and active-set sweeps; a full sweep
 * with a small coefficient change triggers an exact KKT check, and a failed
 * check tightens the active-set tolerance.
 */
template <class Solver>
void runCoordinateDescent(Solver& solver, const LassoOptions& options, double lambda,
                          LassoSolution& out) {
    Index sweeps = 0;
    double innerTolerance = options.coefficient_tolerance;
    double gap = std::numeric_limits<double>::infinity();
    double change = 0.0;
    auto record = [&] {
        if (options.objective_trace) options.objective_trace->push_back(solver.objective());
    };
    while (true) {
        change = solver.sweep(false);
        ++sweeps;
        record();
        const double scale = std::max(1.0, solver.maxAbsCoefficient());
        if (change < options.coefficient_tolerance * scale) {
            solver.refresh();
            gap = solver.kktGap();
            if (gap < options.kkt_tolerance) break;
            innerTolerance *= 0.1;
        }
        while (true) {
            if (sweeps >= options.max_sweeps) throwNoConvergence(sweeps, change, gap, lambda);
            change = solver.sweep(true);
            ++sweeps;
            record();
            if (change < innerTolerance * std::max(1.0, solver.maxAbsCoefficient())) break;
        }
        if (sweeps >= options.max_sweeps) throwNoConvergence(sweeps, change, gap, lambda);
    }
    out.iterations = sweeps;
    out.kkt_gap = gap;
    out.objective = solver.objective();
}

/// Coordinate descent on the aggregated Kronecker problem.
class StructuredSolver {
public:
    StructuredSolver(const AggregatedProblem& problem, double lambda, const Vector* warm)
        : prob_(problem), rows_(*problem.operator_rows), lambda_(lambda),
          coef_(Matrix::Zero(problem.p, problem.q)), norm2_(problem.p, problem.q) {
        const Index p = prob_.p, q = prob_.q;
        if (warm) {
            if (warm->size() != p * q) throw InputError("warm start has the wrong length");
            coef_ = Eigen::Map<const Matrix>(warm->data(), p, q);
        }
        for (Index k = 0; k < q; ++k) {
            const Index len = segmentLength(k);
            const auto srow = rows_.col(k).segment(k, len);
            for (Index c = 0; c < p; ++c) {
                norm2_(c, k) = srow.cwiseAbs2().dot(prob_.counts.col(c).segment(k, len));
                if (norm2_(c, k) == 0.0) coef_(c, k) = 0.0;
            }
        }
        refresh();
    }

    Index segmentLength(Index k) const { return std::min<Index>(prob_.q, k + prob_.bandwidth + 1) - k; }

    /// Recomputes the residual sums from scratch.
    void refresh() {
        const Matrix fitted = detail::fittedMeansTransposed(coef_, rows_, prob_.bandwidth);
        resid_ = prob_.sums - prob_.counts.cwiseProduct(fitted);
    }

    double gradient(Index c, Index k) const {
        const Index len = segmentLength(k);
        const double* s = rows_.data() + k * rows_.rows() + k;
        const double* g = resid_.data() + c * prob_.q + k;
        double acc = 0.0;
        for (Index t = 0; t < len; ++t) acc += s[t] * g[t];
        return acc;
    }

    double update(Index c, Index k) {
        const double n2 = norm2_(c, k);
        if (n2 == 0.0) return 0.0;
        const double old = coef_(c, k);
        const double z = gradient(c, k) + n2 * old;
        const double next = softThreshold(z, 0.5 * lambda_) / n2;
        const double delta = next - old;
        if (delta != 0.0) {
            coef_(c, k) = next;
            const Index len = segmentLength(k);
            const double* s = rows_.data() + k * rows_.rows() + k;
            const double* cnt = prob_.counts.data() + c * prob_.q + k;
            double* g = resid_.data() + c * prob_.q + k;
            for (Index t = 0; t < len; ++t) g[t] -= delta * s[t] * cnt[t];
        }
        return std::fabs(delta);
    }

    double sweep(bool activeOnly) {
        double change = 0.0;
        for (Index k = 0; k < prob_.q; ++k)
            for (Index c = 0; c < prob_.p; ++c) {
                if (activeOnly && coef_(c, k) == 0.0) continue;
                change = std::max(change, update(c, k));
            }
        return change;
    }

    double kktGap() const {
        double gap = 0.0;
        for (Index k = 0; k < prob_.q; ++k)
            for (Index c = 0; c < prob_.p; ++c) {
                if (norm2_(c, k) == 0.0) continue;
                gap = std::max(gap, kktViolation(2.0 * gradient(c, k), coef_(c, k), lambda_));
            }
        return gap;
    }

    double objective() const {
        const Matrix fitted = detail::fittedMeansTransposed(coef_, rows_, prob_.bandwidth);
        const double cross = fitted.cwiseProduct(prob_.sums).sum();
        const double fit = prob_.counts.cwiseProduct(fitted.cwiseAbs2()).sum();
        return prob_.sum_squares - 2.0 * cross + fit + lambda_ * coef_.lpNorm<1>();
    }

    double maxAbsCoefficient() const { return coef_.lpNorm<Eigen::Infinity>(); }

    Vector beta() const { return Eigen::Map<const Vector>(coef_.data(), coef_.size()); }

private:
    const AggregatedProblem& prob_;
    const Matrix& rows_;
    double lambda_;
    Matrix coef_;   // p x q
    Matrix norm2_;  // p x q
    Matrix resid_;  // q x p residual sums per level
};

/// Plain coordinate descent on an explicit design matrix.
class DenseSolver {
public:
    DenseSolver(const Matrix& design, const Vector& response, double lambda, const Vector* warm)
        : a_(design), y_(response), lambda_(lambda), beta_(Vector::Zero(design.cols())),
          norm2_(design.colwise().squaredNorm().transpose()) {
        if (design.rows() != response.size()) throw InputError("design/response size mismatch");
        if (warm) {
            if (warm->size() != design.cols()) throw InputError("warm start has the wrong length");
            beta_ = *warm;
        }
        for (Index j = 0; j < beta_.size(); ++j)
            if (norm2_(j) == 0.0) beta_(j) = 0.0;
        refresh();
    }

    void refresh() { resid_ = y_ - a_ * beta_; }

    double sweep(bool activeOnly) {
        double change = 0.0;
        for (Index j = 0; j < beta_.size(); ++j) {
            if (norm2_(j) == 0.0 || (activeOnly && beta_(j) == 0.0)) continue;
            const double old = beta_(j);
            const double z = a_.col(j).dot(resid_) + norm2_(j) * old;
            const double next = softThreshold(z, 0.5 * lambda_) / norm2_(j);
            const double delta = next - old;
            if (delta != 0.0) {
                beta_(j) = next;
                resid_ -= delta * a_.col(j);
            }
            change = std::max(change, std::fabs(delta));
        }
        return change;
    }

    double kktGap() const { return kktGapDense(a_, y_, beta_, lambda_); }

    double objective() const {
        return (y_ - a_ * beta_).squaredNorm() + lambda_ * beta_.lpNorm<1>();
    }

    double maxAbsCoefficient() const { return beta_.lpNorm<Eigen::Infinity>(); }

    const Vector& beta() const { return beta_; }

private:
    const Matrix& a_;
    const Vector& y_;
    double lambda_;
    Vector beta_;
    Vector norm2_;
    Vector resid_;
};

void checkLambda(double lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw InputError("penalty must be a finite non-negative number");
}

}  // namespace

Index LassoSolution::nonzeros() const { return (beta.array() != 0.0).count(); }

double lambdaMax(const AggregatedProblem& problem) {
    const Matrix& rows = *problem.operator_rows;
    double best = 0.0;
    for (Index k = 0; k < problem.q; ++k) {
        const Index len = std::min<Index>(problem.q, k + problem.bandwidth + 1) - k;
        const auto srow = rows.col(k).segment(k, len);
        for (Index c = 0; c < problem.p; ++c)
            best = std::max(best, std::fabs(srow.dot(problem.sums.col(c).segment(k, len))));
    }
    return 2.0 * best;
}

double lambdaMax(const VectorizedProblem& problem) { return lambdaMax(aggregate(problem)); }

double lambdaMaxDense(const Matrix& design, const Vector& response) {
    return 2.0 * (design.transpose() * response).lpNorm<Eigen::Infinity>();
}

double kktGapDense(const Matrix& design, const Vector& response, const Vector& beta, double lambda) {
    const Vector grad = 2.0 * (design.transpose() * (response - design * beta));
    double gap = 0.0;
    for (Index j = 0; j < beta.size(); ++j) gap = std::max(gap, kktViolation(grad(j), beta(j), lambda));
    return gap;
}

LassoSolution lassoSolve(const AggregatedProblem& problem, double lambda, const Vector* warmStart,
                         const LassoOptions& options) {
    checkLambda(lambda);
    if (!problem.operator_rows) throw InputError("aggregated problem has no whitening operator");
    LassoSolution out;
    out.lambda = lambda;
    // Zero is optimal here; answering directly avoids rounding noise right at the boundary.
    if (lambda >= lambdaMax(problem)) {
        out.beta = Vector::Zero(problem.p * problem.q);
        out.objective = problem.sum_squares;
        return out;
    }
    StructuredSolver solver(problem, lambda, warmStart);
    runCoordinateDescent(solver, options, lambda, out);
    out.beta = solver.beta();
    return out;
}

LassoSolution lassoSolve(const VectorizedProblem& problem, double lambda, const Vector* warmStart,
                         const LassoOptions& options) {
    const AggregatedProblem agg = aggregate(problem);
    return lassoSolve(agg, lambda, warmStart, options);
}

LassoSolution lassoSolveDense(const Matrix& design, const Vector& response, double lambda,
                              const Vector* warmStart, const LassoOptions& options) {
    checkLambda(lambda);
    LassoSolution out;
    out.lambda = lambda;
    if (lambda >= lambdaMaxDense(design, response)) {
        out.beta = Vector::Zero(design.cols());
        out.objective = response.squaredNorm();
        return out;
    }
    DenseSolver solver(design, response, lambda, warmStart);
    runCoordinateDescent(solver, options, lambda, out);
    out.beta = solver.beta();
    return out;
}

}  // namespace mvsel
