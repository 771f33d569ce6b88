#pragma once

#include "mvsel/linmodel.hpp"
#include "mvsel/selection.hpp"
#include "mvsel/whitening.hpp"

#include <cstdint>
#include <optional>

namespace mvsel {

struct PipelineOptions {
    /// Forced whitening; empty means automatic selection by portmanteau p-value.
    std::optional<WhiteningKind> whitening;
    /// Used as-is instead of estimating one (oracle runs in simulations).
    std::optional<WhiteningOperator> fixed_operator;
    Index lags = 10;
    Index resamples = 5000;
    ThresholdMode threshold = ThresholdMode::fixed_one;
    std::uint64_t seed = 42;
    Index cv_folds = 10;
    Index cv_grid_size = 100;
    double cv_min_ratio = 1e-3;
    Index cv_patience = 10;
    LassoOptions lasso;
};

struct PipelineResult {
    AnovaFit anova;
    std::vector<WhiteningCandidate> whitening_table;
    WhiteningOperator whitening;
    WhitenessTestResult whitened_test;  ///< portmanteau on the whitened ANOVA residuals
    CrossValidationResult cv;
    StabilityReport stability;
    ThresholdChoice threshold;
};

/// Residuals, whitening, cross-validated lambda, stability selection and threshold choice.
PipelineResult runPipeline(const Matrix& y, const DesignMatrix& design,
                           const PipelineOptions& options);

}  // namespace mvsel
