#include "mechet/comms.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "mechet/errors.hpp"
#include "mechet/geometry.hpp"
#include "mechet/specfun.hpp"

namespace mechet {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kBracketSeriesBelow = 1e-4;

void require_alpha4(const NetworkConfig& cfg, const char* what) {
    if (cfg.pathloss != 4.0) {
        throw UnsupportedError(std::string(what) + " has a closed form only for pathloss 4, got " +
                               std::to_string(cfg.pathloss));
    }
}

void require_beta(double beta, const char* field) {
    if (!(beta > 0.0 && beta < 1.0)) {
        throw DomainError(std::string(field) + " must lie in (0, 1), got " + std::to_string(beta));
    }
}

double sinr_threshold(double rate, double bandwidth) { return std::expm1(rate / bandwidth * std::numbers::ln2); }

// sum_j lambda_j (P_j/P_k)^{2/alpha}.
double power_weighted_density(const NetworkConfig& cfg, std::size_t k) {
    double sum = 0.0;
    for (std::size_t j = 0; j < cfg.num_tiers(); ++j) {
        sum += derived_tier_density(cfg, j) *
               std::pow(cfg.tiers[j].tx_power_mw / cfg.tiers[k].tx_power_mw, 2.0 / cfg.pathloss);
    }
    return sum;
}

// Shared shell of both max-rate lemmas: (pi lambda_k W / (p_o ln 2)) (2/delta1) f(delta2).
double max_rate_shell(const NetworkConfig& cfg, const BiasMatrix& bias, std::size_t i, std::size_t k,
                      double bandwidth, double beta, double interferer_density) {
    const double delta1 = kPi * weighted_density(cfg, bias, i, k, 0.5);
    const double delta2 = -2.0 * delta1 * std::log(beta) / (kPi * kPi * interferer_density);
    const double po = offload_probability(cfg, bias, i, k);
    return kPi * derived_tier_density(cfg, k) * bandwidth / (po * std::numbers::ln2) * (2.0 / delta1) *
           rate_bracket(delta2);
}

}  // namespace

const char* to_string(Direction d) { return d == Direction::Up ? "up" : "down"; }

double z_integral(double a, double pathloss, double c) {
    if (!(a >= 0.0)) throw DomainError("Z requires a >= 0");
    if (!(pathloss > 2.0)) throw DomainError("Z requires pathloss > 2");
    if (!(c >= 0.0)) throw DomainError("Z requires c >= 0");
    if (a == 0.0) return 0.0;
    if (pathloss == 4.0) return std::sqrt(a) * (kPi / 2.0 - std::atan(std::sqrt(c / a)));
    const double lower = std::pow(c / a, 1.0 / pathloss);
    if (c == 0.0) {
        // int_0^inf 2u/(1+u^alpha) du = (2 pi/alpha) / sin(2 pi/alpha)
        const double t = 2.0 * kPi / pathloss;
        return std::pow(a, 2.0 / pathloss) * t / std::sin(t);
    }
    boost::math::quadrature::exp_sinh<double> integrator;
    double error = 0.0;
    const double integral = integrator.integrate(
        [pathloss, lower](double v) {
            const double u = lower + v;
            return 2.0 * u / (1.0 + std::pow(u, pathloss));
        },
        std::sqrt(std::numeric_limits<double>::epsilon()), &error);
    if (!std::isfinite(integral) || error > 1e-8 * std::abs(integral)) {
        throw NumericalError("Z quadrature did not converge (a=" + std::to_string(a) +
                             ", alpha=" + std::to_string(pathloss) + ", c=" + std::to_string(c) + ")");
    }
    return std::pow(a, 2.0 / pathloss) * integral;
}

double uplink_rate_coverage(const NetworkConfig& cfg, std::size_t i, std::size_t k, double y, double rate) {
    (void)i;  // uplink interference does not depend on the user type
    if (!(y > 0.0)) throw DomainError("serving distance must be > 0");
    if (!(rate >= 0.0)) throw DomainError("rate must be >= 0");
    const double theta = sinr_threshold(rate, cfg.bandwidth_up_hz);
    return std::exp(-kPi * cfg.reuse * derived_tier_density(cfg, k) * y * y * z_integral(theta, cfg.pathloss, 0.0));
}

double downlink_rate_coverage(const NetworkConfig& cfg, const BiasMatrix& bias, std::size_t i, std::size_t k,
                              double y, double rate) {
    if (!(y > 0.0)) throw DomainError("serving distance must be > 0");
    if (!(rate >= 0.0)) throw DomainError("rate must be >= 0");
    const double theta = sinr_threshold(rate, cfg.bandwidth_down_hz);
    double exponent = 0.0;
    for (std::size_t j = 0; j < cfg.num_tiers(); ++j) {
        const double p_hat = cfg.tiers[j].tx_power_mw / cfg.tiers[k].tx_power_mw;
        const double b_hat = bias.at(i, j) / bias.at(i, k);
        exponent += kPi * std::pow(p_hat, 2.0 / cfg.pathloss) * derived_tier_density(cfg, j) * y * y *
                    z_integral(theta, cfg.pathloss, b_hat);
    }
    return std::exp(-exponent);
}

double downlink_rate_coverage_lb(const NetworkConfig& cfg, const BiasMatrix& bias, std::size_t i,
                                 std::size_t k, double y, double rate) {
    (void)bias;
    (void)i;
    if (!(y > 0.0)) throw DomainError("serving distance must be > 0");
    if (!(rate >= 0.0)) throw DomainError("rate must be >= 0");
    const double theta = sinr_threshold(rate, cfg.bandwidth_down_hz);
    return std::exp(-kPi * power_weighted_density(cfg, k) * y * y * z_integral(theta, cfg.pathloss, 0.0));
}

double rate_bracket(double x) {
    if (!(x > 0.0)) throw DomainError("rate bracket requires x > 0");
    if (x < kBracketSeriesBelow) {
        return kPi / 2.0 * x + x * x * ((std::log(x) + specfun::kEulerGamma) / 2.0 - 0.75) - kPi / 12.0 * x * x * x;
    }
    return std::log(x) - specfun::cosine_integral(x) * std::cos(x) - specfun::sine_integral(x) * std::sin(x) +
           specfun::kEulerGamma;
}

double uplink_max_rate(const NetworkConfig& cfg, const BiasMatrix& bias, std::size_t i, std::size_t k) {
    require_alpha4(cfg, "uplink max rate");
    const double beta = cfg.user_types.at(i).coverage_up.at(k);
    require_beta(beta, "coverage_up");
    return max_rate_shell(cfg, bias, i, k, cfg.bandwidth_up_hz, beta, cfg.reuse * derived_tier_density(cfg, k));
}

double downlink_max_rate_lb(const NetworkConfig& cfg, const BiasMatrix& bias, std::size_t i, std::size_t k) {
    require_alpha4(cfg, "downlink max rate");
    const double beta = cfg.user_types.at(i).coverage_down.at(k);
    require_beta(beta, "coverage_down");
    return max_rate_shell(cfg, bias, i, k, cfg.bandwidth_down_hz, beta, power_weighted_density(cfg, k));
}

double downlink_max_rate_exact(const NetworkConfig& cfg, const BiasMatrix& bias, std::size_t i, std::size_t k) {
    require_alpha4(cfg, "downlink max rate");
    const double beta = cfg.user_types.at(i).coverage_down.at(k);
    require_beta(beta, "coverage_down");
    const double target = -std::log(beta);
    const std::size_t K = cfg.num_tiers();
    std::vector<double> coef(K), b_hat(K);
    for (std::size_t j = 0; j < K; ++j) {
        coef[j] = kPi * std::sqrt(cfg.tiers[j].tx_power_mw / cfg.tiers[k].tx_power_mw) * derived_tier_density(cfg, j);
        b_hat[j] = bias.at(i, j) / bias.at(i, k);
    }
    const double lb_coef = kPi * kPi / 2.0 * power_weighted_density(cfg, k);

    // Square root of the SIR threshold that meets the coverage target at
    // distance^2 = t. Solving for sqrt(theta) keeps tiny t from overflowing.
    auto root_threshold_at = [&](double t) {
        auto h = [&](double a) {
            double e = 0.0;
            for (std::size_t j = 0; j < K; ++j) e += coef[j] * a * (kPi / 2.0 - std::atan(std::sqrt(b_hat[j]) / a));
            return e * t - target;
        };
        // The guard-zone-free threshold is always feasible, so it brackets from below.
        double lo = target / (lb_coef * t);
        double hi = 2.0 * lo + std::numeric_limits<double>::min();
        int guard = 0;
        while (h(hi) < 0.0) {
            hi *= 2.0;
            if (++guard > 2000) throw NumericalError("downlink threshold bracket failed");
        }
        if (h(lo) >= 0.0) return lo;
        boost::uintmax_t iters = 200;
        auto r = boost::math::tools::toms748_solve(h, lo, hi, boost::math::tools::eps_tolerance<double>(50), iters);
        return 0.5 * (r.first + r.second);
    };
    // log2(1 + a^2) without overflow.
    auto log2_1p_sq = [](double a) {
        return a > 1.0 ? (2.0 * std::log(a) + std::log1p(1.0 / (a * a))) / std::numbers::ln2
                       : std::log1p(a * a) / std::numbers::ln2;
    };

    // Mean over the serving distance; with u = delta1 t the density becomes e^{-u}.
    const double delta1 = kPi * weighted_density(cfg, bias, i, k, 0.5);
    boost::math::quadrature::exp_sinh<double> integrator;
    double error = 0.0;
    const double mean = integrator.integrate(
        [&](double u) {
            if (u <= 0.0) return 0.0;
            return log2_1p_sq(root_threshold_at(u / delta1)) * std::exp(-u);
        },
        1e-10, &error);
    if (!std::isfinite(mean)) throw NumericalError("downlink exact max rate quadrature failed");
    return cfg.bandwidth_down_hz * mean;
}

CommLatencyResult comm_latency(const NetworkConfig& cfg, const BiasMatrix& bias, std::size_t i, std::size_t k,
                               Direction direction) {
    CommLatencyResult r;
    r.direction = direction;
    int packets = 0;
    if (direction == Direction::Up) {
        r.max_rate = uplink_max_rate(cfg, bias, i, k);
        packets = cfg.user_types.at(i).request_packets;
    } else {
        r.max_rate = downlink_max_rate_lb(cfg, bias, i, k);
        packets = downlink_packets(cfg, i);
    }
    if (!(r.max_rate > 0.0) || !std::isfinite(r.max_rate)) {
        throw NumericalError("max rate for (" + std::to_string(i + 1) + "," + std::to_string(k + 1) +
                             ") is not positive and finite");
    }
    r.latency = packets * cfg.packet_bits / r.max_rate;
    return r;
}

double total_comm_latency(const NetworkConfig& cfg, const BiasMatrix& bias, std::size_t i, std::size_t k) {
    return comm_latency(cfg, bias, i, k, Direction::Up).latency +
           comm_latency(cfg, bias, i, k, Direction::Down).latency;
}

}  // namespace mechet
