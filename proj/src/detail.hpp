#pragma once

#include "mvsel/linmodel.hpp"

namespace mvsel::detail {

/// B * S for p x q coefficients B, returned transposed (q x p) so that each
/// level's fitted row is a contiguous column. Only nonzero coefficients are visited.
Matrix fittedMeansTransposed(const Matrix& coefficients, const Matrix& operatorRows,
                             Index bandwidth);

}  // namespace mvsel::detail
