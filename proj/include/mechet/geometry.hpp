#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "mechet/config.hpp"

namespace mechet {

using Rng = std::mt19937_64;

/// W_{i,k} = P_{m,k} B_{i,k}.
double association_weight(const NetworkConfig& cfg, const BiasMatrix& bias, std::size_t i, std::size_t k);

/// W_{i,j} / W_{i,k}. Exactly 1 when j == k.
double weight_ratio(const NetworkConfig& cfg, const BiasMatrix& bias, std::size_t i, std::size_t j, std::size_t k);

/// sum_j lambda_{m,j} (W_{i,j}/W_{i,k})^exponent.
double weighted_density(const NetworkConfig& cfg, const BiasMatrix& bias, std::size_t i, std::size_t k,
                        double exponent);

/// Probability that a type-i user associates with tier k.
double offload_probability(const NetworkConfig& cfg, const BiasMatrix& bias, std::size_t i, std::size_t k);

/// Density of the distance to the serving tier-k server, given that the
/// type-i user associates with tier k.
double serving_distance_pdf(const NetworkConfig& cfg, const BiasMatrix& bias, std::size_t i, std::size_t k,
                            double y);

struct Point {
    double x = 0.0;
    double y = 0.0;
};

struct PointSet {
    std::vector<Point> points;
    double density = 0.0;
    double region_radius = 0.0;
};

inline constexpr double kDefaultPointCap = 1e7;

/// Homogeneous PPP on a disc centred at the origin.
PointSet sample_ppp(double density, double region_radius, Rng& rng, double cap = kDefaultPointCap);
PointSet sample_ppp(double density, double region_radius, std::uint64_t seed, double cap = kDefaultPointCap);

struct Association {
    std::size_t tier = 0;
    std::size_t server = 0;
    double distance = 0.0;
};

/// Max weighted received power over all servers. weights[j] is W_{i,j}.
/// Ties go to the lowest tier, then the nearest server.
Association associate(const Point& user, const std::vector<PointSet>& tiers, const std::vector<double>& weights,
                      double pathloss);

}  // namespace mechet
