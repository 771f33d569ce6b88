#pragma once

#include "mvsel/linmodel.hpp"
#include "mvsel/rng.hpp"

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace testing_support {

using mvsel::Index;
using mvsel::Matrix;
using mvsel::Vector;

inline Matrix gaussian(Index rows, Index cols, std::uint64_t seed) {
    mvsel::Rng rng(seed);
    std::normal_distribution<double> z;
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = z(rng);
    return m;
}

inline Matrix ar1Covariance(double phi, Index q) {
    Matrix s(q, q);
    for (Index j = 0; j < q; ++j)
        for (Index k = 0; k < q; ++k)
            s(j, k) = std::pow(phi, static_cast<double>(std::abs(j - k))) / (1.0 - phi * phi);
    return s;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

/// Balanced labels L1, L2, ... cycling over `levels`, with at least one sample per level.
inline std::vector<std::string> cyclicLabels(Index n, Index levels) {
    std::vector<std::string> out;
    for (Index i = 0; i < n; ++i) out.push_back("L" + std::to_string(i % levels + 1));
    return out;
}

inline double softThreshold(double x, double t) {
    if (x > t) return x - t;
    if (x < -t) return x + t;
    return 0.0;
}

}  // namespace testing_support
