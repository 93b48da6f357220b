#include "mechet/geometry.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "mechet/errors.hpp"

namespace mechet {

double association_weight(const NetworkConfig& cfg, const BiasMatrix& bias, std::size_t i, std::size_t k) {
    return cfg.tiers.at(k).tx_power_mw * bias.at(i, k);
}

double weight_ratio(const NetworkConfig& cfg, const BiasMatrix& bias, std::size_t i, std::size_t j,
                    std::size_t k) {
    if (j == k) return 1.0;
    return association_weight(cfg, bias, i, j) / association_weight(cfg, bias, i, k);
}

double weighted_density(const NetworkConfig& cfg, const BiasMatrix& bias, std::size_t i, std::size_t k,
                        double exponent) {
    double sum = 0.0;
    for (std::size_t j = 0; j < cfg.num_tiers(); ++j) {
        sum += derived_tier_density(cfg, j) * std::pow(weight_ratio(cfg, bias, i, j, k), exponent);
    }
    return sum;
}

double offload_probability(const NetworkConfig& cfg, const BiasMatrix& bias, std::size_t i, std::size_t k) {
    return derived_tier_density(cfg, k) / weighted_density(cfg, bias, i, k, 2.0 / cfg.pathloss);
}

double serving_distance_pdf(const NetworkConfig& cfg, const BiasMatrix& bias, std::size_t i, std::size_t k,
                            double y) {
    if (y < 0.0) throw DomainError("serving distance must be >= 0");
    const double s = weighted_density(cfg, bias, i, k, 2.0 / cfg.pathloss);
    const double po = derived_tier_density(cfg, k) / s;
    return 2.0 * std::numbers::pi * derived_tier_density(cfg, k) / po * y *
           std::exp(-std::numbers::pi * s * y * y);
}

PointSet sample_ppp(double density, double region_radius, Rng& rng, double cap) {
    if (!(density >= 0.0)) throw DomainError("PPP density must be >= 0");
    if (!(region_radius > 0.0)) throw DomainError("PPP region radius must be > 0");
    const double mean = density * std::numbers::pi * region_radius * region_radius;
    if (mean > cap) {
        throw ResourceError("expected PPP point count " + std::to_string(mean) + " exceeds cap " +
                            std::to_string(cap));
    }
    PointSet set;
    set.density = density;
    set.region_radius = region_radius;
    if (mean == 0.0) return set;
    std::poisson_distribution<long long> count(mean);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const long long n = count(rng);
    set.points.reserve(static_cast<std::size_t>(n));
    for (long long p = 0; p < n; ++p) {
        const double r = region_radius * std::sqrt(unit(rng));
        const double phi = 2.0 * std::numbers::pi * unit(rng);
        set.points.push_back({r * std::cos(phi), r * std::sin(phi)});
    }
    return set;
}

PointSet sample_ppp(double density, double region_radius, std::uint64_t seed, double cap) {
    Rng rng(seed);
    return sample_ppp(density, region_radius, rng, cap);
}

Association associate(const Point& user, const std::vector<PointSet>& tiers, const std::vector<double>& weights,
                      double pathloss) {
    if (weights.size() != tiers.size()) throw PreconditionError("one weight per tier required");
    Association best;
    double best_metric = -1.0;
    for (std::size_t j = 0; j < tiers.size(); ++j) {
        const auto& pts = tiers[j].points;
        if (pts.empty()) throw PreconditionError("tier " + std::to_string(j + 1) + " has no servers");
        // Within a tier the strongest server is the nearest one.
        std::size_t nearest = 0;
        double nearest_d2 = std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < pts.size(); ++s) {
            const double dx = pts[s].x - user.x;
            const double dy = pts[s].y - user.y;
            const double d2 = dx * dx + dy * dy;
            if (d2 < nearest_d2) {
                nearest_d2 = d2;
                nearest = s;
            }
        }
        const double d = std::sqrt(nearest_d2);
        const double metric = weights[j] * std::pow(d, -pathloss);
        if (metric > best_metric) {
            best_metric = metric;
            best = {j, nearest, d};
        }
    }
    return best;
}

}  // namespace mechet
