#pragma once

// Numerical inversion of Laplace transforms on the real line.
// F is callable as std::complex<long double>(std::complex<long double>).

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace mechet::laplace {

using cld = std::complex<long double>;

/// Fixed Talbot contour (Abate-Valko) with M nodes, evaluated in long double.
/// Round-off grows like e^{2M/5} times machine epsilon.
template <typename F>
long double talbot(F&& transform, long double t, int M = 32) {
    const long double pi = std::numbers::pi_v<long double>;
    const long double r = 2.0L * M / (5.0L * t);
    long double sum = 0.5L * std::exp(r * t) * std::real(transform(cld(r, 0.0L)));
    for (int k = 1; k < M; ++k) {
        const long double theta = k * pi / M;
        const long double cot = std::cos(theta) / std::sin(theta);
        const cld s(r * theta * cot, r * theta);
        const long double sigma = theta + (theta * cot - 1.0L) * cot;
        sum += std::real(std::exp(t * s) * transform(s) * cld(1.0L, sigma));
    }
    return r / M * sum;
}

/// Euler summation (Abate-Whitt) with 2M+1 terms.
template <typename F>
long double euler(F&& transform, long double t, int M = 32) {
    const long double pi = std::numbers::pi_v<long double>;
    std::vector<long double> xi(2 * M + 1, 1.0L);
    xi[0] = 0.5L;
    const long double inv = std::pow(2.0L, -M);
    xi[2 * M] = inv;
    long double binom = 1.0L;  // C(M, j)
    for (int j = 1; j < M; ++j) {
        binom = binom * (M - j + 1) / j;
        xi[2 * M - j] = xi[2 * M - j + 1] + inv * binom;
    }
    const long double a = M * std::log(10.0L) / 3.0L;
    long double sum = 0.0L;
    for (int k = 0; k <= 2 * M; ++k) {
        const cld s(a / t, pi * k / t);
        const long double sign = (k % 2 == 0) ? 1.0L : -1.0L;
        sum += sign * xi[k] * std::real(transform(s));
    }
    return std::pow(10.0L, M / 3.0L) / t * sum;
}

}  // namespace mechet::laplace
