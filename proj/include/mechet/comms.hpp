#pragma once

#include <cstddef>

#include "mechet/config.hpp"

namespace mechet {

enum class Direction { Up, Down };

const char* to_string(Direction d);

struct CommLatencyResult {
    double max_rate = 0.0;  // bits/s
    double latency = 0.0;   // seconds
    Direction direction = Direction::Up;
};

/// Z(a, alpha, c) = a^{2/alpha} int_{(c/a)^{1/alpha}}^inf 2u / (1 + u^alpha) du.
/// Closed form for alpha = 4: sqrt(a) (pi/2 - atan(sqrt(c/a))).
double z_integral(double a, double pathloss, double c);

/// P{rate >= target} on the uplink at serving distance y.
double uplink_rate_coverage(const NetworkConfig& cfg, std::size_t i, std::size_t k, double y, double rate);

/// P{rate >= target} on the downlink at serving distance y, with the
/// association guard zone for every interfering tier.
double downlink_rate_coverage(const NetworkConfig& cfg, const BiasMatrix& bias, std::size_t i, std::size_t k,
                              double y, double rate);

/// Downlink coverage with the guard zones dropped (a lower bound on the
/// exact value).
double downlink_rate_coverage_lb(const NetworkConfig& cfg, const BiasMatrix& bias, std::size_t i, std::size_t k,
                                 double y, double rate);

/// f(x) = ln x - ci(x) cos x - si(x) sin x + C, equal to
/// (1/2) int_0^inf ln(1 + x^2/t^2) e^{-t} dt. Series below 1e-4.
double rate_bracket(double x);

/// Mean over the serving distance of the per-distance rate that meets the
/// uplink coverage target. alpha = 4 only.
double uplink_max_rate(const NetworkConfig& cfg, const BiasMatrix& bias, std::size_t i, std::size_t k);

/// Same for the downlink using the guard-zone-free coverage bound.
double downlink_max_rate_lb(const NetworkConfig& cfg, const BiasMatrix& bias, std::size_t i, std::size_t k);

/// Downlink max rate with the exact coverage, solved per distance by root
/// finding and averaged by quadrature. alpha = 4 only.
double downlink_max_rate_exact(const NetworkConfig& cfg, const BiasMatrix& bias, std::size_t i, std::size_t k);

/// packets * U_s / max rate, using the analytical max rate for the direction.
CommLatencyResult comm_latency(const NetworkConfig& cfg, const BiasMatrix& bias, std::size_t i, std::size_t k,
                               Direction direction);

/// Total of uplink and downlink latency in seconds.
double total_comm_latency(const NetworkConfig& cfg, const BiasMatrix& bias, std::size_t i, std::size_t k);

}  // namespace mechet
