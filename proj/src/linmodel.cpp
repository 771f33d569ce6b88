#include "mvsel/linmodel.hpp"

#include "mvsel/errors.hpp"

#include <cmath>
#include <unordered_map>

namespace mvsel {

FactorLabels FactorLabels::fromLabels(std::vector<std::string> labels) {
    if (labels.empty()) throw InputError("factor has no labels");
    FactorLabels out;
    std::unordered_map<std::string, Index> index;
    out.codes.reserve(labels.size());
    for (const auto& label : labels) {
        auto [it, inserted] = index.try_emplace(label, static_cast<Index>(out.levels.size()));
        if (inserted) out.levels.push_back(label);
        out.codes.push_back(it->second);
    }
    out.labels = std::move(labels);
    return out;
}

std::vector<Index> FactorLabels::replicateCounts() const {
    std::vector<Index> counts(levels.size(), 0);
    for (Index code : codes) ++counts[static_cast<std::size_t>(code)];
    return counts;
}

DesignMatrix DesignMatrix::fromIndicators(const Matrix& values) {
    DesignMatrix d;
    d.values = values;
    d.level_of_row.resize(static_cast<std::size_t>(values.rows()));
    d.counts.assign(static_cast<std::size_t>(values.cols()), 0);
    for (Index i = 0; i < values.rows(); ++i) {
        Index hit = -1;
        for (Index c = 0; c < values.cols(); ++c) {
            const double v = values(i, c);
            if (v == 0.0) continue;
            if (v != 1.0 || hit >= 0)
                throw NumericalError("design row " + std::to_string(i) +
                                     " is not a single level indicator");
            hit = c;
        }
        if (hit < 0) throw NumericalError("design row " + std::to_string(i) + " has no level");
        d.level_of_row[static_cast<std::size_t>(i)] = hit;
        ++d.counts[static_cast<std::size_t>(hit)];
    }
    for (std::size_t c = 0; c < d.counts.size(); ++c)
        if (d.counts[c] == 0)
            throw NumericalError("design column " + std::to_string(c) +
                                 " is empty; the design is rank deficient");
    return d;
}

DesignMatrix buildDesign(const FactorLabels& labels) {
    const Index n = labels.sampleCount();
    const Index p = labels.levelCount();
    if (n == 0 || p == 0) throw InputError("empty factor");
    if (static_cast<Index>(labels.codes.size()) != n)
        throw InputError("factor codes do not match labels");

    DesignMatrix d;
    d.values = Matrix::Zero(n, p);
    d.level_of_row = labels.codes;
    d.counts.assign(static_cast<std::size_t>(p), 0);
    for (Index i = 0; i < n; ++i) {
        const Index c = labels.codes[static_cast<std::size_t>(i)];
        if (c < 0 || c >= p) throw InputError("label code out of range");
        d.values(i, c) = 1.0;
        ++d.counts[static_cast<std::size_t>(c)];
    }
    for (std::size_t c = 0; c < d.counts.size(); ++c)
        if (d.counts[c] == 0) throw InputError("level '" + labels.levels[c] + "' has no samples");
    return d;
}

ObservationMatrix standardize(const Matrix& raw, bool scale) {
    const Index n = raw.rows();
    if (n == 0) throw InputError("cannot standardize an empty matrix");
    if (scale && n < 2) throw InputError("variance scaling needs at least two samples");

    ObservationMatrix out;
    out.values = raw;
    out.scaled = scale;
    for (Index j = 0; j < raw.cols(); ++j) {
        auto col = out.values.col(j);
        const double mean = col.mean();
        col.array() -= mean;
        const double ss = col.squaredNorm();
        const bool constant = ss <= 1e-24 * std::max(1.0, mean * mean) * static_cast<double>(n);
        if (constant) {
            col.setZero();
            out.constant_columns.push_back(j);
        } else if (scale) {
            col /= std::sqrt(ss / static_cast<double>(n - 1));
        }
    }
    return out;
}

AnovaFit fitAnova(const Matrix& y, const DesignMatrix& design) {
    const Index n = y.rows();
    const Index p = design.levels();
    if (design.rows() != n)
        throw InputError("design has " + std::to_string(design.rows()) + " rows, data has " +
                         std::to_string(n));
    if (static_cast<Index>(design.level_of_row.size()) != n ||
        static_cast<Index>(design.counts.size()) != p)
        throw NumericalError("design bookkeeping is inconsistent");
    for (Index c = 0; c < p; ++c)
        if (design.counts[static_cast<std::size_t>(c)] == 0)
            throw NumericalError("design is rank deficient: level " + std::to_string(c) +
                                 " has no samples");

    AnovaFit fit;
    fit.coefficients = Matrix::Zero(p, y.cols());
    for (Index i = 0; i < n; ++i)
        fit.coefficients.row(design.level_of_row[static_cast<std::size_t>(i)]) += y.row(i);
    for (Index c = 0; c < p; ++c)
        fit.coefficients.row(c) /= static_cast<double>(design.counts[static_cast<std::size_t>(c)]);

    fit.residuals = y;
    for (Index i = 0; i < n; ++i)
        fit.residuals.row(i) -= fit.coefficients.row(design.level_of_row[static_cast<std::size_t>(i)]);
    return fit;
}

Matrix restrictedResiduals(const Matrix& y, const DesignMatrix& design,
                           const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& support) {
    const AnovaFit full = fitAnova(y, design);
    if (support.rows() != full.coefficients.rows() || support.cols() != full.coefficients.cols())
        throw InputError("support shape does not match the coefficient matrix");
    Matrix residuals = y;
    for (Index i = 0; i < y.rows(); ++i) {
        const Index c = design.level_of_row[static_cast<std::size_t>(i)];
        for (Index k = 0; k < y.cols(); ++k)
            if (support(c, k)) residuals(i, k) -= full.coefficients(c, k);
    }
    return residuals;
}

}  // namespace mvsel
