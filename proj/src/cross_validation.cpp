#include "mvsel/errors.hpp"
#include "mvsel/rng.hpp"
#include "mvsel/selection.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>

namespace mvsel {

std::vector<double> lambdaGrid(double lambdaMax, Index size, double minRatio) {
    if (size < 1) throw InputError("lambda grid must not be empty");
    if (!(minRatio > 0.0 && minRatio <= 1.0)) throw InputError("grid ratio must lie in (0, 1]");
    std::vector<double> grid(static_cast<std::size_t>(size));
    if (size == 1) {
        grid[0] = lambdaMax;
        return grid;
    }
    const double logStep = std::log(minRatio) / static_cast<double>(size - 1);
    for (Index l = 0; l < size; ++l)
        grid[static_cast<std::size_t>(l)] = lambdaMax * std::exp(logStep * static_cast<double>(l));
    return grid;
}

std::vector<std::vector<Index>> foldPartition(Index count, Index folds, std::uint64_t seed) {
    if (folds < 2) throw InputError("cross-validation needs at least two folds");
    if (count < folds)
        throw InputError("cannot split " + std::to_string(count) + " elements into " +
                         std::to_string(folds) + " folds");
    std::vector<Index> order(static_cast<std::size_t>(count));
    std::iota(order.begin(), order.end(), Index{0});
    Rng rng(deriveSeed(seed, streams::folds, 0));
    for (Index t = count - 1; t > 0; --t) {
        std::uniform_int_distribution<Index> pick(0, t);
        std::swap(order[static_cast<std::size_t>(t)], order[static_cast<std::size_t>(pick(rng))]);
    }
    std::vector<std::vector<Index>> out(static_cast<std::size_t>(folds));
    for (Index f = 0; f < folds; ++f) {
        const auto begin = order.begin() + f * count / folds;
        const auto end = order.begin() + (f + 1) * count / folds;
        out[static_cast<std::size_t>(f)].assign(begin, end);
        std::sort(out[static_cast<std::size_t>(f)].begin(), out[static_cast<std::size_t>(f)].end());
    }
    return out;
}

CrossValidationResult crossValidateLambda(const VectorizedProblem& problem,
                                          const CrossValidationOptions& options) {
    return crossValidateLambda(
        problem, lambdaGrid(lambdaMax(problem), options.grid_size, options.min_ratio), options);
}

CrossValidationResult crossValidateLambda(const VectorizedProblem& problem,
                                          const std::vector<double>& grid,
                                          const CrossValidationOptions& options) {
    if (grid.empty()) throw InputError("lambda grid must not be empty");
    const Index total = problem.elementCount();
    const auto folds = foldPartition(total, options.folds, options.seed);
    const auto nFolds = static_cast<Index>(folds.size());
    const auto nGrid = static_cast<Index>(grid.size());

    // Training statistics per fold.
    std::vector<AggregatedProblem> train(static_cast<std::size_t>(nFolds));
    for (Index f = 0; f < nFolds; ++f) {
        const auto& test = folds[static_cast<std::size_t>(f)];
        std::vector<char> held(static_cast<std::size_t>(total), 0);
        for (Index e : test) held[static_cast<std::size_t>(e)] = 1;
        std::vector<Index> elements;
        elements.reserve(static_cast<std::size_t>(total) - test.size());
        for (Index e = 0; e < total; ++e)
            if (!held[static_cast<std::size_t>(e)]) elements.push_back(e);
        train[static_cast<std::size_t>(f)] = aggregate(problem, elements);
    }

    std::vector<Vector> warm(static_cast<std::size_t>(nFolds),
                             Vector::Zero(problem.coefficientCount()));
    std::vector<double> foldError(static_cast<std::size_t>(nFolds));
    CrossValidationResult out;
    out.grid = grid;
    double best = std::numeric_limits<double>::infinity();
    Index sinceBest = 0;
    for (Index l = 0; l < nGrid; ++l) {
        const double lambda = grid[static_cast<std::size_t>(l)];
        std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1)
        for (Index f = 0; f < nFolds; ++f) {
            try {
                const auto fi = static_cast<std::size_t>(f);
                LassoSolution sol = lassoSolve(train[fi], lambda, &warm[fi], options.lasso);
                foldError[fi] = heldOutSquaredError(problem, sol.beta, folds[fi]) /
                                static_cast<double>(folds[fi].size());
                warm[fi] = std::move(sol.beta);
            } catch (...) {
#pragma omp critical(mvsel_cv_failure)
                if (!failure) failure = std::current_exception();
            }
        }
        if (failure) std::rethrow_exception(failure);

        double mean = 0.0;
        for (double e : foldError) mean += e;
        mean /= static_cast<double>(nFolds);
        out.mean_error.push_back(mean);
        out.evaluated = l + 1;
        // Strict improvement only: ties keep the larger penalty.
        if (mean < best) {
            best = mean;
            out.best_index = l;
            sinceBest = 0;
        } else if (options.patience > 0 && ++sinceBest >= options.patience) {
            break;
        }
    }
    out.lambda_cv = grid[static_cast<std::size_t>(out.best_index)];
    return out;
}

}  // namespace mvsel
