#pragma once

// Real-valued special functions used by the closed-form latency and rate
// expressions. Double precision throughout.

namespace mechet::specfun {

/// Euler-Mascheroni constant.
inline constexpr double kEulerGamma = 0.5772156649015329;

inline constexpr int kMaxTerms = 500;
inline constexpr double kTermTolerance = 1e-12;

struct SpecFunResult {
    double value = 0.0;
    bool converged = false;
    int iterations = 0;
};

/// Ci(x) = -int_x^inf cos(t)/t dt, x > 0.
double cosine_integral(double x);

/// Si(x) = int_0^x sin(t)/t dt, x > 0.
double sine_integral_full(double x);

/// Shifted sine integral si(x) = Si(x) - pi/2 (tends to 0 as x -> inf).
double sine_integral(double x);

/// Lower incomplete gamma gamma(a, x) = int_0^x t^{a-1} e^{-t} dt.
double lower_incomplete_gamma(double a, double x);

/// Upper incomplete gamma Gamma(a, x) = Gamma(a) - gamma(a, x).
double upper_incomplete_gamma(double a, double x);

/// Regularized lower incomplete gamma P(a, x) = gamma(a, x) / Gamma(a).
double regularized_lower_gamma(double a, double x);

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x), computed
/// without cancellation.
double regularized_upper_gamma(double a, double x);

double gamma_function(double a);
double log_gamma(double a);

/// Kummer's function 1F1(a; b; z). Negative z goes through the Kummer
/// transform e^z 1F1(b-a; b; -z).
SpecFunResult confluent_hypergeometric_1f1(double a, double b, double z);

/// ln 1F1(a; b; z) for b > 0, b - a >= 0 and a >= 0 (all series terms
/// nonnegative after the Kummer transform). Stays finite where 1F1 itself
/// would overflow.
SpecFunResult log_confluent_hypergeometric_1f1(double a, double b, double z);

/// B(a, b) = Gamma(a) Gamma(b) / Gamma(a + b).
double beta_function(double a, double b);
double log_beta(double a, double b);

}  // namespace mechet::specfun
