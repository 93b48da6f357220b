#include "mechet/specfun.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>

#include "mechet/errors.hpp"

namespace mechet::specfun {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kFpMin = std::numeric_limits<double>::min() / kEps;
// Below this the power series for Ci/Si is used, above it the complex
// continued fraction (Lentz) for E1(ix).
constexpr double kCiSiSwitch = 2.0;

struct CiSi {
    double ci;
    double si_full;
};

CiSi cisi(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw DomainError("cosine/sine integral requires finite x > 0, got " + std::to_string(x));
    }
    if (x > kCiSiSwitch) {
        using C = std::complex<double>;
        C b(1.0, x);
        C c(1.0 / kFpMin, 0.0);
        C d = 1.0 / b;
        C h = d;
        bool ok = false;
        for (int i = 2; i <= kMaxTerms; ++i) {
            const double a = -static_cast<double>((i - 1) * (i - 1));
            b += 2.0;
            d = 1.0 / (a * d + b);
            c = b + a / c;
            const C del = c * d;
            h *= del;
            if (std::abs(del.real() - 1.0) + std::abs(del.imag()) < kEps) {
                ok = true;
                break;
            }
        }
        if (!ok) throw NumericalError("cisi continued fraction did not converge");
        h *= C(std::cos(x), -std::sin(x));
        return {-h.real(), std::numbers::pi / 2.0 + h.imag()};
    }

    // Power series, alternating between the Si (odd k) and Ci (even k) sums.
    double sum_c = 0.0;
    double sum_s = 0.0;
    double sign = 1.0;
    double fact = 1.0;  // x^k / k!
    bool odd = true;
    for (int k = 1; k <= kMaxTerms; ++k) {
        fact *= x / k;
        const double term = fact / k;
        if (odd) {
            sum_s += sign * term;
        } else {
            sum_c += sign * term;
            sign = -sign;
        }
        odd = !odd;
        if (term < kEps * std::max(std::abs(sum_s), std::abs(sum_c)) && k > 2) break;
    }
    // sum_c accumulates x^2/4 - x^4/96 + ..., which enters Ci with a minus.
    return {kEulerGamma + std::log(x) - sum_c, sum_s};
}

}  // namespace

double cosine_integral(double x) { return cisi(x).ci; }

double sine_integral_full(double x) { return cisi(x).si_full; }

double sine_integral(double x) { return cisi(x).si_full - std::numbers::pi / 2.0; }

double gamma_function(double a) { return std::tgamma(a); }

double log_gamma(double a) { return std::lgamma(a); }

namespace {

// Series for P(a, x), valid for x < a + 1.
double gamma_series(double a, double x) {
    double ap = a;
    double del = 1.0 / a;
    double sum = del;
    for (int n = 1; n <= kMaxTerms * 4; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * kEps) {
            return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
        }
    }
    throw NumericalError("incomplete gamma series did not converge for a=" + std::to_string(a) +
                         ", x=" + std::to_string(x));
}

// Continued fraction for Q(a, x), valid for x >= a + 1.
double gamma_continued_fraction(double a, double x) {
    double b = x + 1.0 - a;
    double c = 1.0 / kFpMin;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= kMaxTerms; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = b + an / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) {
            return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
        }
    }
    throw NumericalError("incomplete gamma continued fraction did not converge for a=" +
                         std::to_string(a) + ", x=" + std::to_string(x));
}

void check_gamma_args(double a, double x) {
    if (!(a > 0.0)) throw DomainError("incomplete gamma requires a > 0, got " + std::to_string(a));
    if (!(x >= 0.0)) throw DomainError("incomplete gamma requires x >= 0, got " + std::to_string(x));
}

}  // namespace

double regularized_lower_gamma(double a, double x) {
    check_gamma_args(a, x);
    if (x == 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    if (x < a + 1.0) return gamma_series(a, x);
    return 1.0 - gamma_continued_fraction(a, x);
}

double regularized_upper_gamma(double a, double x) {
    check_gamma_args(a, x);
    if (x == 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    if (x < a + 1.0) return 1.0 - gamma_series(a, x);
    return gamma_continued_fraction(a, x);
}

double lower_incomplete_gamma(double a, double x) {
    return regularized_lower_gamma(a, x) * std::tgamma(a);
}

double upper_incomplete_gamma(double a, double x) {
    return regularized_upper_gamma(a, x) * std::tgamma(a);
}

namespace {

bool nonpositive_integer(double b) { return b <= 0.0 && b == std::floor(b); }

// Direct Kummer series. Stops once past the largest term and the next term
// no longer moves the sum.
SpecFunResult kummer_series(double a, double b, double z) {
    SpecFunResult r;
    double term = 1.0;
    double sum = 1.0;
    for (int n = 0; n < kMaxTerms; ++n) {
        const double ratio = (a + n) * z / ((b + n) * (n + 1));
        term *= ratio;
        sum += term;
        r.iterations = n + 1;
        if (term == 0.0 ||
            (std::abs(ratio) < 1.0 && std::abs(term) <= kTermTolerance * std::max(1.0, std::abs(sum)))) {
            r.converged = std::isfinite(sum);
            break;
        }
    }
    r.value = sum;
    return r;
}

}  // namespace

SpecFunResult confluent_hypergeometric_1f1(double a, double b, double z) {
    if (nonpositive_integer(b)) {
        throw DomainError("1F1 requires b not a nonpositive integer, got " + std::to_string(b));
    }
    if (z == 0.0) return {1.0, true, 0};
    if (z < 0.0) {
        SpecFunResult r = kummer_series(b - a, b, -z);
        r.value *= std::exp(z);
        r.converged = r.converged && std::isfinite(r.value);
        return r;
    }
    return kummer_series(a, b, z);
}

SpecFunResult log_confluent_hypergeometric_1f1(double a, double b, double z) {
    if (!(b > 0.0)) throw DomainError("log 1F1 requires b > 0");
    double shift = 0.0;
    if (z < 0.0) {
        shift = z;
        a = b - a;
        z = -z;
    }
    if (a < 0.0) throw DomainError("log 1F1 requires nonnegative series terms");
    SpecFunResult r;
    if (z == 0.0 || a == 0.0) return {shift, true, 0};

    // Positive-term series with periodic rescaling; the series needs about
    // z terms to peak, so the budget grows with z.
    constexpr double kRescale = 1e200;
    const double log_rescale = std::log(kRescale);
    const int budget = kMaxTerms + static_cast<int>(4.0 * z);
    double term = 1.0;
    double sum = 1.0;
    double log_scale = 0.0;
    for (int n = 0; n < budget; ++n) {
        const double ratio = (a + n) * z / ((b + n) * (n + 1));
        term *= ratio;
        sum += term;
        if (sum > kRescale) {
            sum /= kRescale;
            term /= kRescale;
            log_scale += log_rescale;
        }
        r.iterations = n + 1;
        if (ratio < 1.0 && term <= kTermTolerance * sum) {
            r.converged = true;
            break;
        }
    }
    r.value = shift + log_scale + std::log(sum);
    r.converged = r.converged && std::isfinite(r.value);
    return r;
}

double log_beta(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw DomainError("beta function requires a, b > 0");
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

double beta_function(double a, double b) { return std::exp(log_beta(a, b)); }

}  // namespace mechet::specfun
