#include "mvsel/errors.hpp"
#include "mvsel/whitening.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mvsel {

namespace {

constexpr int kMaxTerms = 100000;
constexpr double kEps = 1e-16;

// log of x^a e^{-x} / Gamma(a)
double logPrefactor(double a, double x) { return a * std::log(x) - x - std::lgamma(a); }

// P(a, x) by its power series, valid for x < a + 1.
double lowerSeries(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int n = 0; n < kMaxTerms; ++n) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * kEps) break;
    }
    return sum * std::exp(logPrefactor(a, x));
}

// Q(a, x) by its continued fraction (modified Lentz), valid for x >= a + 1.
double upperFraction(double a, double x) {
    constexpr double tiny = std::numeric_limits<double>::min() / kEps;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kMaxTerms; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < kEps) break;
    }
    return std::exp(logPrefactor(a, x)) * h;
}

}  // namespace

double regularizedGammaQ(double a, double x) {
    if (!(a > 0.0)) throw InputError("incomplete gamma needs a positive shape");
    if (std::isnan(x)) return std::numeric_limits<double>::quiet_NaN();
    if (x <= 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    if (x < a + 1.0) return std::clamp(1.0 - lowerSeries(a, x), 0.0, 1.0);
    return std::clamp(upperFraction(a, x), 0.0, 1.0);
}

double chiSquaredSurvival(double x, double dof) {
    if (!(dof > 0.0)) throw InputError("chi-squared degrees of freedom must be positive");
    if (x <= 0.0) return 1.0;
    return regularizedGammaQ(0.5 * dof, 0.5 * x);
}

}  // namespace mvsel
