#pragma once

// Serial reference kernels. They are written for clarity and are kept to
// cross-check the OpenMP kernels in tests and benchmarks.

#include "mvsel/linmodel.hpp"
#include "mvsel/selection.hpp"
#include "mvsel/whitening.hpp"

#include <vector>

namespace mvsel::reference {

Autocovariance pooledAutocovariance(const Matrix& residuals, Index maxLag);

/// Dense M * S, ignoring the band structure.
Matrix applyWhitening(const Matrix& m, const WhiteningOperator& op);

double portmanteauStatistic(const Matrix& residuals, Index lags);

/// Selection counts over resamples, one resample after the other.
Eigen::MatrixXi stabilityCounts(const VectorizedProblem& problem, double lambda,
                                const StabilityOptions& options);

}  // namespace mvsel::reference
