#include "mvsel/errors.hpp"
#include "mvsel/rng.hpp"
#include "mvsel/selection.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iostream>
#include <numeric>

namespace mvsel {

std::vector<Index> halfSubsample(Index count, std::uint64_t seed) {
    if (count < 2) throw InputError("subsampling needs at least two elements");
    const Index half = count / 2;
    std::vector<Index> pool(static_cast<std::size_t>(count));
    std::iota(pool.begin(), pool.end(), Index{0});
    Rng rng(seed);
    for (Index t = 0; t < half; ++t) {
        std::uniform_int_distribution<Index> pick(t, count - 1);
        std::swap(pool[static_cast<std::size_t>(t)], pool[static_cast<std::size_t>(pick(rng))]);
    }
    pool.resize(static_cast<std::size_t>(half));
    std::sort(pool.begin(), pool.end());
    return pool;
}

StabilityReport stabilitySelect(const VectorizedProblem& problem, double lambdaCv,
                                const StabilityOptions& options) {
    if (options.resamples < 1) throw InputError("at least one resample is required");
    const Index total = problem.elementCount();
    if (total < 2) throw InputError("stability selection needs nq >= 2");

    // Full-data solution at lambdaCv: a warm start only, the criterion is convex.
    const LassoSolution full = lassoSolve(problem, lambdaCv, nullptr, options.lasso);

    Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(problem.p, problem.q);
    Index failed = 0;
    std::exception_ptr failure;
#pragma omp parallel
    {
        Eigen::MatrixXi local = Eigen::MatrixXi::Zero(problem.p, problem.q);
        Index localFailed = 0;
#pragma omp for schedule(dynamic, 4)
        for (Index r = 0; r < options.resamples; ++r) {
            try {
                const auto elements =
                    halfSubsample(total, deriveSeed(options.seed, streams::resamples,
                                                    static_cast<std::uint64_t>(r)));
                const AggregatedProblem agg = aggregate(problem, elements);
                const LassoSolution sol = lassoSolve(agg, lambdaCv, &full.beta, options.lasso);
                const Eigen::Map<const Matrix> coef(sol.beta.data(), problem.p, problem.q);
                local += (coef.array() != 0.0).cast<int>().matrix();
            } catch (const ConvergenceError& e) {
                ++localFailed;
#pragma omp critical(mvsel_stability_log)
                std::cerr << "warning: resample " << r << " dropped: " << e.what() << '\n';
            } catch (...) {
#pragma omp critical(mvsel_stability_failure)
                if (!failure) failure = std::current_exception();
            }
        }
#pragma omp critical(mvsel_stability_merge)
        {
            counts += local;
            failed += localFailed;
        }
    }
    if (failure) std::rethrow_exception(failure);
    if (static_cast<double>(failed) > options.max_failure_fraction * static_cast<double>(options.resamples) ||
        failed == options.resamples)
        throw ConvergenceError(std::to_string(failed) + " of " + std::to_string(options.resamples) +
                               " resamples failed to converge");

    StabilityReport report;
    report.lambda_cv = lambdaCv;
    report.resamples = options.resamples - failed;
    report.failed = failed;
    report.frequencies = counts.cast<double>() / static_cast<double>(report.resamples);
    report.threshold = 1.0;
    report.support = supportAt(report.frequencies, 1.0);
    return report;
}

std::vector<SelectedCoefficient> supportAt(const Matrix& frequencies, double threshold) {
    constexpr double kSlack = 1e-12;
    std::vector<SelectedCoefficient> out;
    for (Index k = 0; k < frequencies.cols(); ++k)
        for (Index c = 0; c < frequencies.rows(); ++c)
            if (frequencies(c, k) > 0.0 && frequencies(c, k) >= threshold - kSlack)
                out.push_back({c, k, frequencies(c, k)});
    return out;
}

std::string_view toString(ThresholdMode mode) {
    return mode == ThresholdMode::fixed_one ? "one" : "maxpval";
}

ThresholdMode thresholdModeFromString(std::string_view name) {
    if (name == "one" || name == "fixed-one" || name == "1") return ThresholdMode::fixed_one;
    if (name == "maxpval" || name == "max-pvalue") return ThresholdMode::max_pvalue;
    throw InputError("unknown threshold mode '" + std::string(name) + "'");
}

std::vector<double> thresholdGrid() {
    std::vector<double> grid;
    for (int i = 0; i <= 10; ++i) grid.push_back(static_cast<double>(10 + i) / 20.0);
    return grid;
}

ThresholdChoice chooseThreshold(StabilityReport& report, ThresholdMode mode,
                                const ThresholdContext& context) {
    ThresholdChoice choice;
    if (mode == ThresholdMode::fixed_one) {
        choice.threshold = 1.0;
    } else {
        const Index p = report.frequencies.rows();
        const Index q = report.frequencies.cols();
        if (context.y.cols() != q || context.design.levels() != p)
            throw InputError("threshold context does not match the frequency matrix");
        double best = -1.0;
        for (double t : thresholdGrid()) {
            Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask(p, q);
            mask.setConstant(false);
            const auto support = supportAt(report.frequencies, t);
            for (const auto& s : support) mask(s.level, s.response) = true;
            const Matrix resid = restrictedResiduals(context.y, context.design, mask);
            const double pv =
                portmanteauTest(applyWhitening(resid, context.whitening), context.lags).pvalue;
            choice.scores.push_back({t, static_cast<Index>(support.size()), pv});
            // Ascending thresholds with >=: ties go to the larger threshold.
            if (pv >= best) {
                best = pv;
                choice.threshold = t;
            }
        }
    }
    choice.support = supportAt(report.frequencies, choice.threshold);
    report.threshold = choice.threshold;
    report.support = choice.support;
    return choice;
}

}  // namespace mvsel
