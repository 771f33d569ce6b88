#include "mvsel/whitening.hpp"

#include "mvsel/errors.hpp"

#include <cmath>

namespace mvsel {

std::string_view toString(WhiteningKind kind) {
    switch (kind) {
        case WhiteningKind::identity: return "identity";
        case WhiteningKind::ar1: return "ar1";
        case WhiteningKind::nonparametric: return "nonparam";
        case WhiteningKind::oracle: return "oracle";
    }
    return "unknown";
}

WhiteningKind whiteningKindFromString(std::string_view name) {
    if (name == "identity" || name == "none") return WhiteningKind::identity;
    if (name == "ar1") return WhiteningKind::ar1;
    if (name == "nonparam" || name == "nonparametric") return WhiteningKind::nonparametric;
    if (name == "oracle") return WhiteningKind::oracle;
    throw InputError("unknown whitening '" + std::string(name) + "'");
}

Autocovariance pooledAutocovariance(const Matrix& residuals, Index maxLag) {
    const Index n = residuals.rows();
    const Index q = residuals.cols();
    if (n == 0 || q == 0) throw InputError("autocovariance of an empty matrix");
    if (maxLag < 0 || maxLag >= q)
        throw InputError("maximum lag " + std::to_string(maxLag) + " must be below q = " +
                         std::to_string(q));

    // Per-row values first, then an ordered sum over rows: the result does not
    // depend on the thread schedule.
    Matrix perRow(maxLag + 1, n);
    const Matrix rowsT = residuals.transpose();
#pragma omp parallel for schedule(dynamic, 1)
    for (Index i = 0; i < n; ++i) {
        const auto x = rowsT.col(i);
        for (Index h = 0; h <= maxLag; ++h)
            perRow(h, i) = x.head(q - h).dot(x.tail(q - h)) / static_cast<double>(q);
    }

    Autocovariance out;
    out.gamma.assign(static_cast<std::size_t>(maxLag + 1), 0.0);
    for (Index h = 0; h <= maxLag; ++h) {
        double s = 0.0;
        for (Index i = 0; i < n; ++i) s += perRow(h, i);
        out.gamma[static_cast<std::size_t>(h)] = s / static_cast<double>(n);
    }
    return out;
}

Ar1Fit fitAr1(const Matrix& residuals) {
    const Index n = residuals.rows();
    const Index q = residuals.cols();
    if (n == 0 || q < 2) throw InputError("AR(1) fit needs at least one row of length 2");

    constexpr double kBoundary = 1e-6;
    Ar1Fit fit;
    fit.row_phi1.resize(static_cast<std::size_t>(n));
    double phiSum = 0.0;
    double sigmaSum = 0.0;
    for (Index i = 0; i < n; ++i) {
        const auto x = residuals.row(i);
        const double g0 = x.squaredNorm() / static_cast<double>(q);
        const double g1 = x.head(q - 1).dot(x.tail(q - 1)) / static_cast<double>(q);
        if (!(g0 > 0.0))
            throw NumericalError("row " + std::to_string(i) + " has zero variance");
        const double phi = g1 / g0;
        fit.row_phi1[static_cast<std::size_t>(i)] = phi;
        phiSum += phi;
        sigmaSum += g0 * (1.0 - phi * phi);
    }
    fit.phi1 = phiSum / static_cast<double>(n);
    fit.sigma2 = sigmaSum / static_cast<double>(n);
    if (fit.phi1 >= 1.0 - kBoundary) {
        fit.phi1 = 1.0 - kBoundary;
        fit.clamped = true;
    } else if (fit.phi1 <= -1.0 + kBoundary) {
        fit.phi1 = -1.0 + kBoundary;
        fit.clamped = true;
    }
    return fit;
}

WhiteningOperator identityOperator(Index q) {
    if (q < 1) throw InputError("operator dimension must be positive");
    WhiteningOperator op;
    op.kind = WhiteningKind::identity;
    op.matrix = Matrix::Identity(q, q);
    op.bandwidth = 0;
    return op;
}

WhiteningOperator ar1InverseSqrt(double phi1, Index q) {
    if (!(std::fabs(phi1) < 1.0)) throw InputError("AR(1) coefficient must lie in (-1, 1)");
    if (q < 1) throw InputError("operator dimension must be positive");
    WhiteningOperator op;
    op.kind = WhiteningKind::ar1;
    op.phi1 = phi1;
    op.matrix = Matrix::Identity(q, q);
    op.matrix(0, 0) = std::sqrt(1.0 - phi1 * phi1);
    for (Index k = 0; k + 1 < q; ++k) op.matrix(k, k + 1) = -phi1;
    op.bandwidth = q > 1 ? 1 : 0;
    return op;
}

Matrix toeplitzCovariance(const Autocovariance& gamma) {
    const auto q = static_cast<Index>(gamma.gamma.size());
    Matrix t(q, q);
    for (Index j = 0; j < q; ++j)
        for (Index k = 0; k < q; ++k) t(j, k) = gamma.gamma[static_cast<std::size_t>(std::abs(j - k))];
    return t;
}

Matrix choleskyLower(const Matrix& spd) {
    const Index q = spd.rows();
    if (spd.cols() != q) throw InputError("Cholesky needs a square matrix");
    // Row-major so that both operands of every inner product are contiguous.
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> l =
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>::Zero(q, q);
    for (Index j = 0; j < q; ++j) {
        for (Index k = 0; k < j; ++k) {
            const double s = spd(j, k) - l.row(j).head(k).dot(l.row(k).head(k));
            l(j, k) = s / l(k, k);
        }
        const double d = spd(j, j) - l.row(j).head(j).squaredNorm();
        if (!(d > 0.0) || !std::isfinite(d)) throw CholeskyError(static_cast<std::size_t>(j), d);
        l(j, j) = std::sqrt(d);
    }
    return l;
}

namespace {

WhiteningOperator inverseCholeskyOperator(const Matrix& covariance) {
    const Index q = covariance.rows();
    const Matrix l = choleskyLower(covariance);
    const Matrix linv = l.triangularView<Eigen::Lower>().solve(Matrix::Identity(q, q));
    WhiteningOperator op;
    op.kind = WhiteningKind::nonparametric;
    op.matrix = linv.transpose();
    op.matrix.triangularView<Eigen::StrictlyLower>().setZero();
    op.bandwidth = q - 1;
    return op;
}

}  // namespace

WhiteningOperator nonparamInverseSqrt(const Autocovariance& gamma) {
    if (gamma.gamma.empty()) throw InputError("empty autocovariance sequence");
    return inverseCholeskyOperator(toeplitzCovariance(gamma));
}

WhiteningOperator nonparamInverseSqrtRegularized(const Autocovariance& gamma, double relativeRidge) {
    if (gamma.gamma.empty()) throw InputError("empty autocovariance sequence");
    Matrix cov = toeplitzCovariance(gamma);
    try {
        return inverseCholeskyOperator(cov);
    } catch (const CholeskyError&) {
        const double ridge = relativeRidge * std::fabs(gamma.gamma.front());
        cov.diagonal().array() += ridge;
        WhiteningOperator op = inverseCholeskyOperator(cov);
        op.ridge = ridge;
        return op;
    }
}

Matrix applyWhitening(const Matrix& m, const WhiteningOperator& op) {
    const Index q = op.dim();
    if (m.cols() != q)
        throw InputError("whitening operator is " + std::to_string(q) + " x " + std::to_string(q) +
                         " but the matrix has " + std::to_string(m.cols()) + " columns");
    const Index n = m.rows();
    const Matrix& s = op.matrix;
    const Index bw = op.bandwidth;
    Matrix out(n, q);
#pragma omp parallel
    {
        Vector row(q);
#pragma omp for schedule(static)
        for (Index i = 0; i < n; ++i) {
            row = m.row(i).transpose();
            for (Index col = 0; col < q; ++col) {
                const Index k0 = std::max<Index>(0, col - bw);
                const Index len = col - k0 + 1;
                out(i, col) = s.col(col).segment(k0, len).dot(row.segment(k0, len));
            }
        }
    }
    return out;
}

WhitenessTestResult portmanteauTest(const Matrix& residuals, Index lags) {
    const Index n = residuals.rows();
    const Index q = residuals.cols();
    if (n == 0) throw InputError("portmanteau test on an empty matrix");
    if (lags < 1 || lags >= q)
        throw InputError("lag count H = " + std::to_string(lags) + " must satisfy 1 <= H < q = " +
                         std::to_string(q));

    std::vector<double> rowStat(static_cast<std::size_t>(n), 0.0);
    std::vector<char> degenerate(static_cast<std::size_t>(n), 0);
    const Matrix rowsT = residuals.transpose();
#pragma omp parallel for schedule(static)
    for (Index i = 0; i < n; ++i) {
        const auto x = rowsT.col(i);
        const double g0 = x.squaredNorm();
        if (!(g0 > 0.0)) {
            degenerate[static_cast<std::size_t>(i)] = 1;
            continue;
        }
        double s = 0.0;
        for (Index h = 1; h <= lags; ++h) {
            const double rho = x.head(q - h).dot(x.tail(q - h)) / g0;
            s += rho * rho;
        }
        rowStat[static_cast<std::size_t>(i)] = static_cast<double>(q) * s;
    }
    for (Index i = 0; i < n; ++i)
        if (degenerate[static_cast<std::size_t>(i)])
            throw NumericalError("row " + std::to_string(i) +
                                 " has zero variance; autocorrelation is undefined");

    WhitenessTestResult result;
    result.lags = lags;
    result.dof = n * lags;
    result.row_pvalues.resize(static_cast<std::size_t>(n));
    double total = 0.0;
    for (Index i = 0; i < n; ++i) {
        const double st = rowStat[static_cast<std::size_t>(i)];
        total += st;
        result.row_pvalues[static_cast<std::size_t>(i)] =
            chiSquaredSurvival(st, static_cast<double>(lags));
    }
    result.statistic = total;
    result.pvalue = chiSquaredSurvival(total, static_cast<double>(result.dof));
    return result;
}

WhiteningOperator estimateWhitening(const Matrix& residuals, WhiteningKind kind) {
    const Index q = residuals.cols();
    switch (kind) {
        case WhiteningKind::identity: return identityOperator(q);
        case WhiteningKind::ar1: return ar1InverseSqrt(fitAr1(residuals).phi1, q);
        case WhiteningKind::nonparametric:
            return nonparamInverseSqrtRegularized(pooledAutocovariance(residuals, q - 1));
        case WhiteningKind::oracle: break;
    }
    throw InputError("oracle whitening needs the true covariance and cannot be estimated");
}

WhiteningSelection selectWhitening(const Matrix& residuals, Index lags) {
    if (lags < 1 || lags >= residuals.cols())
        throw InputError("lag count H = " + std::to_string(lags) + " must satisfy 1 <= H < q = " +
                         std::to_string(residuals.cols()));
    WhiteningSelection sel;
    double best = -1.0;
    for (WhiteningKind kind :
         {WhiteningKind::identity, WhiteningKind::ar1, WhiteningKind::nonparametric}) {
        WhiteningCandidate cand;
        cand.kind = kind;
        try {
            WhiteningOperator op = estimateWhitening(residuals, kind);
            cand.phi1 = op.phi1;
            cand.ridge = op.ridge;
            cand.test = portmanteauTest(applyWhitening(residuals, op), lags);
            // Strict comparison: on an exact tie the earlier, simpler model stays.
            if (cand.test->pvalue > best) {
                best = cand.test->pvalue;
                sel.op = std::move(op);
            }
        } catch (const NumericalError& e) {
            if (kind == WhiteningKind::identity) throw;
            cand.error = e.what();
        }
        sel.table.push_back(std::move(cand));
    }
    return sel;
}

}  // namespace mvsel
