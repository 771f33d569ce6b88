#pragma once

#include "mvsel/linmodel.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mvsel {

/// Pooled empirical autocovariances gamma(0..maxLag) of the rows of a residual matrix.
struct Autocovariance {
    std::vector<double> gamma;
};

struct Ar1Fit {
    double phi1 = 0.0;             ///< mean of the per-row Yule-Walker estimates
    std::vector<double> row_phi1;  ///< one estimate per row
    double sigma2 = 0.0;           ///< innovation variance, mean of gamma_i(0) (1 - phi_i^2)
    bool clamped = false;          ///< phi1 was pulled back inside (-1, 1)
};

enum class WhiteningKind { identity, ar1, nonparametric, oracle };

std::string_view toString(WhiteningKind kind);
WhiteningKind whiteningKindFromString(std::string_view name);

/**
 * Right-multiplication operator S standing for Sigma^{-1/2}.
 *
 * S is always upper triangular with a band: row k is nonzero only on
 * columns k .. min(q - 1, k + bandwidth). Identity has bandwidth 0, AR(1)
 * bandwidth 1 and the nonparametric inverse Cholesky factor bandwidth q - 1.
 */
struct WhiteningOperator {
    WhiteningKind kind = WhiteningKind::identity;
    Matrix matrix;
    Index bandwidth = 0;
    double phi1 = 0.0;   ///< ar1 / oracle only
    double ridge = 0.0;  ///< diagonal loading added before a successful Cholesky, 0 if none

    [[nodiscard]] Index dim() const { return matrix.rows(); }
    [[nodiscard]] Index rowEnd(Index k) const {
        return std::min<Index>(matrix.cols(), k + bandwidth + 1);
    }
};

struct WhitenessTestResult {
    double statistic = 0.0;
    Index dof = 0;
    double pvalue = 1.0;
    std::vector<double> row_pvalues;
    Index lags = 0;
};

Autocovariance pooledAutocovariance(const Matrix& residuals, Index maxLag);

Ar1Fit fitAr1(const Matrix& residuals);

WhiteningOperator identityOperator(Index q);

/// Closed-form inverse square root of the AR(1) covariance.
WhiteningOperator ar1InverseSqrt(double phi1, Index q);

/// Builds the Toeplitz matrix from gamma and returns (L^{-1})'.
/// Throws CholeskyError carrying the failing pivot.
WhiteningOperator nonparamInverseSqrt(const Autocovariance& gamma);

/// nonparamInverseSqrt with one retry after adding relativeRidge * gamma(0) to the diagonal.
WhiteningOperator nonparamInverseSqrtRegularized(const Autocovariance& gamma,
                                                 double relativeRidge = 1e-8);

/// Toeplitz covariance built from gamma(0..q-1).
Matrix toeplitzCovariance(const Autocovariance& gamma);

/// Lower Cholesky factor; throws CholeskyError.
Matrix choleskyLower(const Matrix& spd);

/// M * S using the band structure of S. Rows are processed in parallel.
Matrix applyWhitening(const Matrix& m, const WhiteningOperator& op);

/// Pooled portmanteau statistic q * sum_i sum_{h<=H} rho_i(h)^2 against chi2(nH),
/// plus per-row p-values against chi2(H).
WhitenessTestResult portmanteauTest(const Matrix& residuals, Index lags);

/// Upper-tail probability of the chi-squared distribution.
double chiSquaredSurvival(double x, double dof);

/// Regularized upper incomplete gamma Q(a, x).
double regularizedGammaQ(double a, double x);

/// Estimates the operator of the requested kind from residuals.
/// `oracle` is not estimable and is rejected here.
WhiteningOperator estimateWhitening(const Matrix& residuals, WhiteningKind kind);

struct WhiteningCandidate {
    WhiteningKind kind = WhiteningKind::identity;
    std::optional<WhitenessTestResult> test;  ///< empty when the estimator failed
    double phi1 = 0.0;
    double ridge = 0.0;
    std::string error;
};

struct WhiteningSelection {
    WhiteningOperator op;
    std::vector<WhiteningCandidate> table;  ///< identity, ar1, nonparametric
};

/// Tries identity, AR(1) and nonparametric whitening and keeps the one whose
/// whitened residuals have the largest pooled portmanteau p-value.
/// Exact ties go to the simpler model.
WhiteningSelection selectWhitening(const Matrix& residuals, Index lags);

}  // namespace mvsel
