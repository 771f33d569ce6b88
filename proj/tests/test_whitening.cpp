#include "mvsel/errors.hpp"
#include "mvsel/simulate.hpp"
#include "mvsel/whitening.hpp"
#include "support.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <gtest/gtest.h>

#include <cmath>

using namespace mvsel;
using testing_support::ar1Covariance;
using testing_support::gaussian;

namespace {

double identityError(const Matrix& s, const Matrix& sigma) {
    return (s.transpose() * sigma * s - Matrix::Identity(s.rows(), s.cols())).cwiseAbs().maxCoeff();
}

Matrix ar1Rows(Index n, Index q, double phi, std::uint64_t seed) {
    Rng rng(seed);
    return simulateAr1Rows(n, q, phi, 1.0, rng);
}

Autocovariance sequence(std::vector<double> g) {
    return Autocovariance{std::move(g)};
}

}  // namespace

TEST(Autocovariance, ZeroMatrixGivesZeros) {
    const Autocovariance g = pooledAutocovariance(Matrix::Zero(3, 6), 5);
    ASSERT_EQ(g.gamma.size(), 6u);
    for (double v : g.gamma) EXPECT_EQ(v, 0.0);
}

TEST(Autocovariance, AlternatingRowHandComputed) {
    Matrix e(1, 4);
    e << 1, -1, 1, -1;
    const Autocovariance g = pooledAutocovariance(e, 3);
    EXPECT_DOUBLE_EQ(g.gamma[0], 1.0);
    EXPECT_DOUBLE_EQ(g.gamma[1], -0.75);
    EXPECT_DOUBLE_EQ(g.gamma[2], 0.5);
    EXPECT_DOUBLE_EQ(g.gamma[3], -0.25);
}

TEST(Autocovariance, PooledIsMeanOfRows) {
    Matrix e(2, 3);
    e << 1, 2, 3, 0, 1, 0;
    const Autocovariance g = pooledAutocovariance(e, 2);
    // row 1: (14, 8, 3) / 3, row 2: (1, 0, 0) / 3
    EXPECT_NEAR(g.gamma[0], 15.0 / 6.0, 1e-15);
    EXPECT_NEAR(g.gamma[1], 8.0 / 6.0, 1e-15);
    EXPECT_NEAR(g.gamma[2], 3.0 / 6.0, 1e-15);
}

TEST(Autocovariance, WhiteNoiseLagsNearZero) {
    const Autocovariance g = pooledAutocovariance(gaussian(30, 1000, 17), 1);
    EXPECT_NEAR(g.gamma[0], 1.0, 0.05);
    EXPECT_LT(std::abs(g.gamma[1]), 0.1);
}

TEST(Autocovariance, LagMustBeBelowQ) {
    EXPECT_THROW(pooledAutocovariance(Matrix::Ones(2, 4), 4), InputError);
}

TEST(FitAr1, RecoversGeneratorCoefficient) {
    const Ar1Fit fit = fitAr1(ar1Rows(30, 1000, 0.9, 3));
    EXPECT_GT(fit.phi1, 0.85);
    EXPECT_LT(fit.phi1, 0.95);
    EXPECT_EQ(fit.row_phi1.size(), 30u);
    double mean = 0;
    for (double v : fit.row_phi1) mean += v / 30.0;
    EXPECT_NEAR(fit.phi1, mean, 1e-15);
    EXPECT_FALSE(fit.clamped);
}

TEST(FitAr1, WhiteNoiseNearZero) {
    EXPECT_LT(std::abs(fitAr1(gaussian(30, 1000, 4)).phi1), 0.1);
}

TEST(FitAr1, AlternatingRowRatio) {
    Matrix e(1, 4);
    e << 1, -1, 1, -1;
    EXPECT_DOUBLE_EQ(fitAr1(e).phi1, -0.75);
}

TEST(FitAr1, ErrorShrinksWithQ) {
    double err100 = 0, err1000 = 0;
    for (std::uint64_t r = 0; r < 20; ++r) {
        err100 += std::abs(fitAr1(ar1Rows(30, 100, 0.7, 100 + r)).phi1 - 0.7);
        err1000 += std::abs(fitAr1(ar1Rows(30, 1000, 0.7, 200 + r)).phi1 - 0.7);
    }
    EXPECT_LT(err1000, err100);
}

TEST(FitAr1, ZeroVarianceRowRejected) {
    Matrix e = gaussian(3, 10, 1);
    e.row(1).setZero();
    EXPECT_THROW(fitAr1(e), NumericalError);
}

TEST(FitAr1, BiasedDivisorStaysInsideUnitInterval) {
    Matrix flat = Matrix::Ones(1, 50);
    const Ar1Fit f = fitAr1(flat);
    EXPECT_DOUBLE_EQ(f.phi1, 49.0 / 50.0);
    EXPECT_FALSE(f.clamped);
}

TEST(Ar1Operator, ZeroCoefficientIsIdentity) {
    const WhiteningOperator op = ar1InverseSqrt(0.0, 5);
    EXPECT_EQ(op.matrix, Matrix::Identity(5, 5));
}

TEST(Ar1Operator, ThreeByThreeEntries) {
    const WhiteningOperator op = ar1InverseSqrt(0.7, 3);
    Matrix expected(3, 3);
    expected << std::sqrt(0.51), -0.7, 0, 0, 1, -0.7, 0, 0, 1;
    EXPECT_LT((op.matrix - expected).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_NEAR(op.matrix(0, 0), 0.71414, 1e-5);
    EXPECT_EQ(op.bandwidth, 1);
    EXPECT_EQ(op.kind, WhiteningKind::ar1);
}

TEST(Ar1Operator, WhitensAnalyticCovariance) {
    for (double phi : {-0.9, -0.7, -0.3, 0.3, 0.7, 0.9})
        for (Index q : {2, 10, 100})
            EXPECT_LT(identityError(ar1InverseSqrt(phi, q).matrix, ar1Covariance(phi, q)), 1e-8)
                << "phi " << phi << " q " << q;
    EXPECT_LT(identityError(ar1InverseSqrt(0.9, 1000).matrix, ar1Covariance(0.9, 1000)), 1e-8);
}

TEST(Ar1Operator, UnitRootRejected) {
    EXPECT_THROW(ar1InverseSqrt(1.0, 4), InputError);
    EXPECT_THROW(ar1InverseSqrt(-1.2, 4), InputError);
}

TEST(NonparamOperator, WhiteSequenceGivesIdentity) {
    const WhiteningOperator op = nonparamInverseSqrt(sequence({1, 0, 0, 0}));
    EXPECT_LT((op.matrix - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_EQ(op.kind, WhiteningKind::nonparametric);
}

TEST(NonparamOperator, TwoByTwoByHand) {
    const WhiteningOperator op = nonparamInverseSqrt(sequence({1, 0.5}));
    Matrix l(2, 2);
    l << 1, 0, 0.5, std::sqrt(0.75);
    const Matrix s = l.inverse().transpose();
    EXPECT_LT((op.matrix - s).cwiseAbs().maxCoeff(), 1e-15);
    Matrix sigma(2, 2);
    sigma << 1, 0.5, 0.5, 1;
    EXPECT_LT(identityError(op.matrix, sigma), 1e-12);
}

TEST(NonparamOperator, AnalyticAr1Sequence) {
    const double phi = 0.7;
    std::vector<double> g(60);
    for (std::size_t h = 0; h < g.size(); ++h) g[h] = std::pow(phi, static_cast<double>(h)) / (1 - phi * phi);
    const WhiteningOperator op = nonparamInverseSqrt(sequence(g));
    EXPECT_LT(identityError(op.matrix, ar1Covariance(phi, 60)), 1e-8);
    // the upper-triangular square root of an AR(1) inverse is unique, so it
    // must coincide with the closed form
    EXPECT_LT((op.matrix - ar1InverseSqrt(phi, 60).matrix).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(NonparamOperator, RandomPositiveDefiniteToeplitz) {
    Rng rng(77);
    std::uniform_real_distribution<double> coef(-0.95, 0.95), weight(0.1, 2.0);
    std::uniform_int_distribution<int> size(2, 60);
    for (int t = 0; t < 50; ++t) {
        const Index q = size(rng);
        // sums of AR(1) kernels plus a nugget are positive definite
        std::vector<double> g(static_cast<std::size_t>(q), 0.0);
        for (int k = 0; k < 3; ++k) {
            const double phi = coef(rng), w = weight(rng);
            for (Index h = 0; h < q; ++h) g[static_cast<std::size_t>(h)] += w * std::pow(phi, static_cast<double>(h));
        }
        g[0] += 0.05;
        const Autocovariance a = sequence(g);
        const WhiteningOperator op = nonparamInverseSqrt(a);
        EXPECT_LT(identityError(op.matrix, toeplitzCovariance(a)), 1e-8) << "instance " << t;
        EXPECT_TRUE(op.matrix.isUpperTriangular());
    }
}

TEST(NonparamOperator, CholeskyFailureReportsPivot) {
    try {
        nonparamInverseSqrt(sequence({1, 2}));
        FAIL() << "expected a Cholesky failure";
    } catch (const CholeskyError& e) {
        EXPECT_EQ(e.pivot(), 1u);
    }
}

TEST(NonparamOperator, RidgeRetryOnSingularToeplitz) {
    const Autocovariance singular = sequence({1, 1, 1});
    EXPECT_THROW(nonparamInverseSqrt(singular), CholeskyError);
    const WhiteningOperator op = nonparamInverseSqrtRegularized(singular);
    EXPECT_NEAR(op.ridge, 1e-8, 1e-20);
    EXPECT_THROW(nonparamInverseSqrtRegularized(sequence({1, 2})), CholeskyError);
    EXPECT_EQ(nonparamInverseSqrtRegularized(sequence({1, 0.5})).ridge, 0.0);
}

TEST(ApplyWhitening, IdentityLeavesInputUnchanged) {
    const Matrix m = gaussian(4, 6, 2);
    EXPECT_EQ(applyWhitening(m, identityOperator(6)), m);
}

TEST(ApplyWhitening, MatchesDenseProduct) {
    const Matrix m = gaussian(5, 7, 9);
    const Matrix noise = gaussian(40, 7, 10);
    for (const WhiteningOperator& op :
         {identityOperator(7), ar1InverseSqrt(0.6, 7), estimateWhitening(noise, WhiteningKind::ar1),
          estimateWhitening(noise, WhiteningKind::nonparametric)}) {
        EXPECT_LT((applyWhitening(m, op) - m * op.matrix).cwiseAbs().maxCoeff(), 1e-12)
            << toString(op.kind);
    }
}

TEST(ApplyWhitening, DimensionMismatchRejected) {
    EXPECT_THROW(applyWhitening(Matrix::Ones(2, 3), identityOperator(4)), InputError);
}

TEST(ApplyWhitening, TrueOperatorRemovesLagOneCorrelation) {
    const Matrix w = applyWhitening(ar1Rows(30, 1000, 0.9, 5), ar1InverseSqrt(0.9, 1000));
    const Autocovariance g = pooledAutocovariance(w, 1);
    EXPECT_LT(std::abs(g.gamma[1] / g.gamma[0]), 0.05);
}

TEST(ChiSquared, ZeroHasFullMass) {
    for (double dof : {1.0, 2.0, 10.0, 300.0}) EXPECT_EQ(chiSquaredSurvival(0.0, dof), 1.0);
}

TEST(ChiSquared, TwoDegreesIsExponential) {
    EXPECT_NEAR(chiSquaredSurvival(2.0 * std::log(2.0), 2), 0.5, 1e-12);
    for (double x = 0.05; x < 80; x *= 1.7)
        EXPECT_NEAR(chiSquaredSurvival(x, 2), std::exp(-x / 2), 1e-12) << x;
}

TEST(ChiSquared, ThreeHundredDegrees) {
    // Q(150, 150) from an independent implementation; the median of chi2(300)
    // sits below its mean, so the value is a little under one half
    const double oracle = boost::math::gamma_q(150.0, 150.0);
    EXPECT_NEAR(oracle, 0.48914177025064, 1e-13);
    EXPECT_NEAR(chiSquaredSurvival(300, 300), oracle, 1e-10);
}

TEST(ChiSquared, AgreesWithBoostIncompleteGamma) {
    for (double dof : {1.0, 3.0, 10.0, 57.0, 300.0, 10000.0})
        for (double ratio : {0.01, 0.3, 0.8, 1.0, 1.2, 2.0, 4.0}) {
            const double x = ratio * dof;
            EXPECT_NEAR(chiSquaredSurvival(x, dof), boost::math::gamma_q(dof / 2, x / 2), 1e-10)
                << "dof " << dof << " x " << x;
        }
}

TEST(ChiSquared, MonotoneDecreasing) {
    double prev = 1.0;
    for (double x = 0.0; x < 400; x += 3.7) {
        const double v = chiSquaredSurvival(x, 300);
        EXPECT_LE(v, prev);
        prev = v;
    }
}

TEST(Portmanteau, StatisticAndDegrees) {
    const Matrix e = gaussian(4, 50, 8);
    const WhitenessTestResult r = portmanteauTest(e, 3);
    double stat = 0;
    std::vector<double> rowStat(4, 0.0);
    for (Index i = 0; i < 4; ++i) {
        const double g0 = e.row(i).squaredNorm() / 50;
        for (Index h = 1; h <= 3; ++h) {
            double g = 0;
            for (Index t = 0; t + h < 50; ++t) g += e(i, t) * e(i, t + h);
            const double rho = g / 50 / g0;
            rowStat[static_cast<std::size_t>(i)] += 50 * rho * rho;
        }
        stat += rowStat[static_cast<std::size_t>(i)];
    }
    EXPECT_NEAR(r.statistic, stat, 1e-10);
    EXPECT_EQ(r.dof, 12);
    EXPECT_EQ(r.lags, 3);
    EXPECT_NEAR(r.pvalue, boost::math::gamma_q(6.0, stat / 2), 1e-10);
    ASSERT_EQ(r.row_pvalues.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i)
        EXPECT_NEAR(r.row_pvalues[i], boost::math::gamma_q(1.5, rowStat[i] / 2), 1e-10);
}

TEST(Portmanteau, ScaleInvariant) {
    const Matrix e = gaussian(6, 80, 9);
    const WhitenessTestResult a = portmanteauTest(e, 5);
    const WhitenessTestResult b = portmanteauTest(37.5 * e, 5);
    EXPECT_NEAR(a.statistic, b.statistic, 1e-10 * a.statistic);
    EXPECT_NEAR(a.pvalue, b.pvalue, 1e-12);
}

TEST(Portmanteau, RejectsStrongAr1) {
    EXPECT_LT(portmanteauTest(ar1Rows(30, 1000, 0.9, 12), 10).pvalue, 1e-6);
}

TEST(Portmanteau, CalibratedOnWhiteNoise) {
    int rejected = 0;
    const int reps = 300;
    for (int r = 0; r < reps; ++r)
        if (portmanteauTest(gaussian(30, 200, 1000 + static_cast<std::uint64_t>(r)), 10).pvalue < 0.05)
            ++rejected;
    const double rate = static_cast<double>(rejected) / reps;
    EXPECT_GE(rate, 0.02);
    EXPECT_LE(rate, 0.09);
}

TEST(Portmanteau, PreconditionsEnforced) {
    EXPECT_THROW(portmanteauTest(gaussian(2, 5, 1), 5), InputError);
    EXPECT_THROW(portmanteauTest(gaussian(2, 5, 1), 0), InputError);
    Matrix flat = gaussian(2, 5, 1);
    flat.row(0).setZero();
    EXPECT_THROW(portmanteauTest(flat, 2), NumericalError);
}

TEST(SelectWhitening, Ar1ResidualsRejectIdentity) {
    const WhiteningSelection sel = selectWhitening(ar1Rows(30, 500, 0.9, 21), 10);
    ASSERT_EQ(sel.table.size(), 3u);
    EXPECT_EQ(sel.table[0].kind, WhiteningKind::identity);
    EXPECT_LT(sel.table[0].test->pvalue, 1e-6);
    EXPECT_NE(sel.op.kind, WhiteningKind::identity);
    double best = 0;
    for (const auto& c : sel.table) best = std::max(best, c.test->pvalue);
    for (const auto& c : sel.table)
        if (c.kind == sel.op.kind) EXPECT_EQ(c.test->pvalue, best);
}

TEST(SelectWhitening, WhiteNoiseAcceptsEverything) {
    const WhiteningSelection sel = selectWhitening(gaussian(30, 500, 22), 10);
    for (const auto& c : sel.table) EXPECT_GT(c.test->pvalue, 0.05) << toString(c.kind);
}

TEST(SelectWhitening, ExactTiePrefersIdentity) {
    // Isolated spikes have zero autocovariance at every positive lag, so all
    // three candidates whiten to the same autocorrelations.
    Matrix e = Matrix::Zero(3, 20);
    e(0, 0) = 1;
    e(1, 5) = 2;
    e(2, 11) = -3;
    const WhiteningSelection sel = selectWhitening(e, 4);
    EXPECT_EQ(sel.table[0].test->pvalue, sel.table[1].test->pvalue);
    EXPECT_EQ(sel.table[0].test->pvalue, sel.table[2].test->pvalue);
    EXPECT_EQ(sel.op.kind, WhiteningKind::identity);
}

TEST(WhiteningKind, NamesRoundTrip) {
    for (auto k : {WhiteningKind::identity, WhiteningKind::ar1, WhiteningKind::nonparametric,
                   WhiteningKind::oracle})
        EXPECT_EQ(whiteningKindFromString(toString(k)), k);
    EXPECT_THROW(whiteningKindFromString("arma"), InputError);
    EXPECT_THROW(estimateWhitening(gaussian(3, 8, 1), WhiteningKind::oracle), InputError);
}
