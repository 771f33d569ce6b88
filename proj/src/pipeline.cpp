#include "mvsel/pipeline.hpp"

#include "mvsel/errors.hpp"

namespace mvsel {

namespace {

// Runs one pipeline stage and prefixes any library error with the stage name,
// keeping the error category so callers can still map it to an exit status.
template <class F>
auto stage(const char* name, F&& body) -> decltype(body()) {
    const std::string prefix = std::string(name) + ": ";
    try {
        return body();
    } catch (const InputError& e) {
        throw InputError(prefix + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError(prefix + e.what());
    } catch (const ConvergenceError& e) {
        throw ConvergenceError(prefix + e.what());
    }
}

}  // namespace

PipelineResult runPipeline(const Matrix& y, const DesignMatrix& design,
                           const PipelineOptions& options) {
    if (options.lags < 1 || options.lags >= y.cols())
        throw InputError("lag count H = " + std::to_string(options.lags) +
                         " must satisfy 1 <= H < q = " + std::to_string(y.cols()));
    PipelineResult result;
    result.anova = stage("anova", [&] { return fitAnova(y, design); });
    const Matrix& resid = result.anova.residuals;

    stage("whitening", [&] {
        if (options.fixed_operator) {
            result.whitening = *options.fixed_operator;
        } else if (options.whitening) {
            result.whitening = estimateWhitening(resid, *options.whitening);
            WhiteningCandidate cand;
            cand.kind = result.whitening.kind;
            cand.phi1 = result.whitening.phi1;
            cand.ridge = result.whitening.ridge;
            result.whitening_table.push_back(std::move(cand));
        } else {
            WhiteningSelection sel = selectWhitening(resid, options.lags);
            result.whitening = std::move(sel.op);
            result.whitening_table = std::move(sel.table);
        }
        if (result.whitening.dim() != y.cols())
            throw InputError("whitening operator does not match the number of responses");

        result.whitened_test = portmanteauTest(applyWhitening(resid, result.whitening), options.lags);
        for (auto& cand : result.whitening_table)
            if (!cand.test && cand.error.empty()) cand.test = result.whitened_test;
    });

    const VectorizedProblem problem = stage("vectorize", [&] {
        return vectorize(applyWhitening(y, result.whitening), design, result.whitening);
    });

    CrossValidationOptions cv;
    cv.folds = options.cv_folds;
    cv.grid_size = options.cv_grid_size;
    cv.min_ratio = options.cv_min_ratio;
    cv.patience = options.cv_patience;
    cv.seed = options.seed;
    cv.lasso = options.lasso;
    result.cv = stage("cross-validation", [&] { return crossValidateLambda(problem, cv); });

    StabilityOptions stab;
    stab.resamples = options.resamples;
    stab.seed = options.seed;
    stab.lasso = options.lasso;
    result.stability = stage("stability selection",
                             [&] { return stabilitySelect(problem, result.cv.lambda_cv, stab); });

    const ThresholdContext context{y, design, result.whitening, options.lags};
    result.threshold = stage("threshold", [&] {
        return chooseThreshold(result.stability, options.threshold, context);
    });
    return result;
}

}  // namespace mvsel
