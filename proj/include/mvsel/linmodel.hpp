#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

namespace mvsel {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/**
 * One-way factor: a categorical label per sample plus the ordered list of
 * distinct levels. Levels are kept in first-appearance order.
 */
struct FactorLabels {
    std::vector<std::string> labels;
    std::vector<std::string> levels;
    std::vector<Index> codes;  ///< codes[i] is the level index of labels[i]

    /// Builds levels in first-appearance order. Throws InputError on an empty sequence.
    static FactorLabels fromLabels(std::vector<std::string> labels);

    [[nodiscard]] Index sampleCount() const { return static_cast<Index>(labels.size()); }
    [[nodiscard]] Index levelCount() const { return static_cast<Index>(levels.size()); }
    [[nodiscard]] std::vector<Index> replicateCounts() const;
};

/// n x p indicator design of a one-way factor.
struct DesignMatrix {
    Matrix values;
    std::vector<Index> level_of_row;  ///< column holding the 1 in each row
    std::vector<Index> counts;        ///< column sums n_c

    [[nodiscard]] Index rows() const { return values.rows(); }
    [[nodiscard]] Index levels() const { return values.cols(); }

    /// Wraps an arbitrary 0/1 matrix. Rows with anything other than a single
    /// 1 are rejected with NumericalError (the model would be rank deficient).
    static DesignMatrix fromIndicators(const Matrix& values);
};

struct ObservationMatrix {
    Matrix values;
    std::vector<Index> constant_columns;  ///< centered only, variance left at 0
    bool scaled = false;
};

struct AnovaFit {
    Matrix coefficients;  ///< p x q, group means
    Matrix residuals;     ///< n x q, Y - X B
};

DesignMatrix buildDesign(const FactorLabels& labels);

/// Centers every column; with `scale` also divides non-constant columns by
/// their sample standard deviation (n - 1 divisor).
ObservationMatrix standardize(const Matrix& raw, bool scale);

/// Column-wise OLS for a one-way indicator design, computed as group means.
AnovaFit fitAnova(const Matrix& y, const DesignMatrix& design);

/// Residuals of the one-way model restricted to a support: coefficient (c, k)
/// is the level-c mean of column k when support(c, k) is set, zero otherwise.
Matrix restrictedResiduals(const Matrix& y, const DesignMatrix& design,
                           const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& support);

}  // namespace mvsel
