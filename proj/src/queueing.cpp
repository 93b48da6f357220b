#include "mechet/queueing.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mechet/comms.hpp"
#include "mechet/errors.hpp"
#include "mechet/geometry.hpp"
#include "mechet/laplace.hpp"
#include "mechet/specfun.hpp"

namespace mechet {

namespace {

// Fixed Talbot gains about 0.6 digits per node but loses e^{2M/5} times
// epsilon to round-off, so 32 nodes is the sweet spot for long double.
// It is cross-checked against 24 nodes; beyond this disagreement the Euler
// algorithm is used instead.
constexpr int kTalbotNodes = 32;
constexpr int kTalbotCheckNodes = 24;
constexpr double kTalbotAgreement = 1e-8;
constexpr int kEulerTerms = 32;
constexpr double kClampSlack = 1e-9;

void require_stable(const TierQueue& q) {
    const double rho = q.utilization();
    if (!(rho < 1.0)) throw InstabilityError(q.tier, rho);
}

void require_packets(int d) {
    if (d < 1) throw DomainError("task size must be >= 1 packet, got " + std::to_string(d));
}

double erlang_cdf(int d, double mu, double T) {
    return specfun::regularized_lower_gamma(static_cast<double>(d), mu * T);
}

double clamp_probability(double p, const char* what) {
    if (!std::isfinite(p)) throw NumericalError(std::string(what) + " produced a non-finite value");
    if (p < -kClampSlack || p > 1.0 + kClampSlack) {
        throw NumericalError(std::string(what) + " left [0,1] by more than round-off: " + std::to_string(p));
    }
    return std::clamp(p, 0.0, 1.0);
}

// J = int_0^T e^{zeta (T - r)} Erlang_d(r) dr, with a = mu + zeta of either sign.
double erlang_exp_convolution(int d, double mu, double zeta, double T) {
    const double a = mu + zeta;
    const double log_prefix = d * std::log(mu) - std::lgamma(static_cast<double>(d));
    if (a > 0.0 && a * T >= 1.0) {
        return std::pow(mu / a, d) * std::exp(zeta * T) * specfun::regularized_lower_gamma(d, a * T);
    }
    // int_0^T r^{d-1} e^{-a r} dr = sum_m (-a)^m T^{m+d} / (m! (m+d)); every
    // term is positive for a <= 0.
    const double x = -a * T;
    double power = 1.0;  // x^m / m!
    double sum = 1.0 / d;
    for (int m = 1; m < 100000; ++m) {
        power *= x / m;
        const double term = power / (m + d);
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum) && m > std::abs(x)) break;
    }
    return std::exp(log_prefix + zeta * T + d * std::log(T)) * sum;
}

}  // namespace

double TierQueue::total_rate() const {
    double s = 0.0;
    for (const auto& c : classes) s += c.rate;
    return s;
}

double TierQueue::utilization() const {
    double s = 0.0;
    for (const auto& c : classes) s += c.rate * c.packets;
    return s / service_rate;
}

bool QueueLoad::stable() const { return first_unstable() == npos; }

std::size_t QueueLoad::first_unstable() const {
    for (std::size_t k = 0; k < utilizations.size(); ++k) {
        if (!(utilizations[k] < 1.0)) return k;
    }
    return npos;
}

double arrival_rate(const NetworkConfig& cfg, const BiasMatrix& bias, std::size_t i, std::size_t k) {
    const double thinning = cfg.thinned_arrivals ? cfg.user_types.at(i).coverage_up.at(k) : 1.0;
    return thinning * cfg.user_density * cfg.user_types.at(i).portion * offload_probability(cfg, bias, i, k) /
           derived_tier_density(cfg, k);
}

QueueLoad compute_loads(const NetworkConfig& cfg, const BiasMatrix& bias) {
    const std::size_t I = cfg.num_types(), K = cfg.num_tiers();
    QueueLoad load;
    load.arrival_rates.assign(I, std::vector<double>(K, 0.0));
    load.total_rates.assign(K, 0.0);
    load.utilizations.assign(K, 0.0);
    for (std::size_t i = 0; i < I; ++i) {
        for (std::size_t k = 0; k < K; ++k) {
            const double lam = arrival_rate(cfg, bias, i, k);
            load.arrival_rates[i][k] = lam;
            load.total_rates[k] += lam;
        }
    }
    for (std::size_t k = 0; k < K; ++k) load.utilizations[k] = utilization(cfg, load, k);
    return load;
}

double utilization(const NetworkConfig& cfg, const QueueLoad& loads, std::size_t k) {
    double work = 0.0;
    for (std::size_t i = 0; i < cfg.num_types(); ++i) {
        work += loads.arrival_rates.at(i).at(k) * cfg.user_types[i].task_packets;
    }
    return work / cfg.tiers.at(k).service_rate;
}

TierQueue tier_queue(const NetworkConfig& cfg, const QueueLoad& loads, std::size_t k) {
    TierQueue q;
    q.service_rate = cfg.tiers.at(k).service_rate;
    q.tier = k;
    for (std::size_t i = 0; i < cfg.num_types(); ++i) {
        q.classes.push_back({loads.arrival_rates.at(i).at(k), cfg.user_types[i].task_packets});
    }
    return q;
}

cplx service_laplace(const TierQueue& q, cplx s) {
    const double lam = q.total_rate();
    if (!(lam > 0.0)) throw DomainError("service transform needs a positive arrival rate");
    const cplx base = q.service_rate / (s + q.service_rate);
    if (!std::isfinite(std::abs(base))) throw DomainError("service transform pole at s = -mu");
    cplx sum = 0.0;
    for (const auto& c : q.classes) sum += c.rate / lam * std::pow(base, c.packets);
    return sum;
}

cplx waiting_laplace(const TierQueue& q, cplx s) {
    require_stable(q);
    const double lam = q.total_rate();
    if (lam == 0.0) return 1.0;
    if (s == 0.0) return 1.0;
    return (1.0 - q.utilization()) * s / (s - lam + lam * service_laplace(q, s));
}

double secp_laplace_inversion(const TierQueue& q, int d, double T) {
    require_packets(d);
    require_stable(q);
    if (!(T > 0.0)) return 0.0;
    const double lam = q.total_rate();
    const double mu = q.service_rate;
    if (lam == 0.0) return erlang_cdf(d, mu, T);

    // CDF transform: L_W(s) L_S_d(s) / s, with the factor s cancelled.
    const long double one_minus_rho = 1.0L - q.utilization();
    auto transform = [&](laplace::cld s) {
        const laplace::cld base = static_cast<long double>(mu) / (s + static_cast<long double>(mu));
        laplace::cld mix = 0.0L;
        for (const auto& c : q.classes) {
            laplace::cld p = 1.0L;
            for (int n = 0; n < c.packets; ++n) p *= base;
            mix += static_cast<long double>(c.rate / lam) * p;
        }
        laplace::cld tagged = 1.0L;
        for (int n = 0; n < d; ++n) tagged *= base;
        return one_minus_rho * tagged / (s - static_cast<long double>(lam) + static_cast<long double>(lam) * mix);
    };
    auto invert = [&](auto&& f) {
        const long double fine = laplace::talbot(f, T, kTalbotNodes);
        const long double coarse = laplace::talbot(f, T, kTalbotCheckNodes);
        if (std::abs(fine - coarse) <= kTalbotAgreement) return static_cast<double>(fine);
        const long double alt = laplace::euler(f, T, kEulerTerms);
        if (std::abs(alt - coarse) > 1e-6 && std::abs(alt - fine) > 1e-6) {
            throw NumericalError("Laplace inversion did not converge at T=" + std::to_string(T) +
                                 ": talbot64=" + std::to_string(static_cast<double>(fine)) +
                                 " talbot32=" + std::to_string(static_cast<double>(coarse)) +
                                 " euler=" + std::to_string(static_cast<double>(alt)));
        }
        return static_cast<double>(alt);
    };
    const double value = invert(transform);
    return clamp_probability(value, "Laplace inversion");
}

double secp_single_type(const TierQueue& q, int d, double T) {
    require_packets(d);
    require_stable(q);
    for (const auto& c : q.classes) {
        if (c.rate > 0.0 && c.packets != 1) {
            throw PreconditionError("single-type closed form needs exponential service (1-packet tasks); got a " +
                                    std::to_string(c.packets) + "-packet class");
        }
    }
    if (!(T > 0.0)) return 0.0;
    const double lam = q.total_rate();
    const double mu = q.service_rate;
    if (lam == 0.0) return erlang_cdf(d, mu, T);
    if (d == 1) return -std::expm1(-(mu - lam) * T);
    const double rho = lam / mu;
    const double value = erlang_cdf(d, mu, T) - std::pow(rho, 1 - d) * std::exp(-(mu - lam) * T) * erlang_cdf(d, lam, T);
    return clamp_probability(value, "single-type closed form");
}

double secp_two_type(const TierQueue& q, int d, double T) {
    require_packets(d);
    require_stable(q);
    double lam1 = 0.0, lam2 = 0.0;
    for (const auto& c : q.classes) {
        if (c.rate == 0.0) continue;
        if (c.packets == 1) {
            lam1 += c.rate;
        } else if (c.packets == 2) {
            lam2 += c.rate;
        } else {
            throw PreconditionError("two-type closed form needs 1- or 2-packet tasks; got a " +
                                    std::to_string(c.packets) + "-packet class");
        }
    }
    if (!(T > 0.0)) return 0.0;
    const double mu = q.service_rate;
    const double lam = lam1 + lam2;
    if (lam == 0.0) return erlang_cdf(d, mu, T);
    const double rho = (lam1 + 2.0 * lam2) / mu;

    // Poles of the waiting-time transform; zeta1 written without cancellation near rho = 1.
    const double root = std::sqrt(lam * lam / 4.0 + mu * lam2);
    const double zeta2 = -mu + lam / 2.0 - root;
    const double zeta1 = mu * mu * (1.0 - rho) / zeta2;
    const double gap = zeta1 - zeta2;

    const double E = erlang_cdf(d, mu, T);
    const double c1 = (zeta1 + mu) * (zeta1 + mu) / gap;
    const double c2 = (zeta2 + mu) * (zeta2 + mu) / gap;
    const double part1 = c1 * (erlang_exp_convolution(d, mu, zeta1, T) - E) / zeta1;
    const double part2 = c2 == 0.0 ? 0.0 : c2 * (erlang_exp_convolution(d, mu, zeta2, T) - E) / zeta2;
    return clamp_probability((1.0 - rho) * (E + part1 - part2), "two-type closed form");
}

std::pair<double, double> takacs_moments(const TierQueue& q) {
    require_stable(q);
    const double mu = q.service_rate;
    const double rho = q.utilization();
    double s2 = 0.0, s3 = 0.0;
    for (const auto& c : q.classes) {
        const double d = c.packets;
        s2 += c.rate * d * (d + 1.0) / (mu * mu);
        s3 += c.rate * d * (d + 1.0) * (d + 2.0) / (mu * mu * mu);
    }
    const double m1 = s2 / (2.0 * (1.0 - rho));
    const double m2 = 2.0 * m1 * m1 + s3 / (3.0 * (1.0 - rho));
    return {m1, m2};
}

GammaApproxParams gamma_params(const TierQueue& q, GammaFit fit) {
    const auto [m1, m2] = takacs_moments(q);
    GammaApproxParams g;
    g.mean = m1;
    g.second_moment = m2;
    g.busy_probability = q.utilization();
    if (m1 > 0.0) {
        const double scale = fit == GammaFit::Conditional ? g.busy_probability : 1.0;
        const double c1 = m1 / scale;
        const double c2 = m2 / scale;
        g.shape = c1 * c1 / (c2 - c1 * c1);
        g.rate = g.shape / c1;
    }
    return g;
}

double secp_gamma_approx(const TierQueue& q, int d, double T, GammaFit fit) {
    require_packets(d);
    require_stable(q);
    if (!(T > 0.0)) return 0.0;
    const double mu = q.service_rate;
    const double rho = q.utilization();
    const double E = erlang_cdf(d, mu, T);
    if (q.total_rate() == 0.0) return E;
    const GammaApproxParams g = gamma_params(q, fit);
    const double b1 = g.shape, b2 = g.rate;

    // P{G + S <= T} for G ~ Gamma(b1, b2), S ~ Erlang(d, mu); the finite sum
    // is evaluated term by term in log space.
    const double log_front = b1 * std::log(b2) - b2 * T - std::lgamma(b1);
    double tail = 0.0;
    for (int n = 0; n < d; ++n) {
        const auto f = specfun::log_confluent_hypergeometric_1f1(n + 1.0, b1 + n + 1.0, T * (b2 - mu));
        if (!f.converged) {
            throw NumericalError("1F1 did not converge in the Gamma approximation (n=" + std::to_string(n) + ")");
        }
        const double log_term = log_front + n * std::log(mu) - std::lgamma(n + 1.0) + specfun::log_beta(b1, n + 1.0) +
                                (b1 + n) * std::log(T) + f.value;
        tail += std::exp(log_term);
    }
    const double conv = specfun::regularized_lower_gamma(b1, b2 * T) - tail;
    return clamp_probability((1.0 - rho) * E + rho * conv, "Gamma approximation");
}

const char* to_string(SecpMethod m) {
    switch (m) {
        case SecpMethod::Auto: return "auto";
        case SecpMethod::ExactClosedForm: return "exact-closed-form";
        case SecpMethod::LaplaceInversion: return "laplace-inversion";
        case SecpMethod::GammaApprox: return "gamma-approx";
        case SecpMethod::GammaApproxUnconditional: return "gamma-approx-unconditional";
        case SecpMethod::Simulation: return "simulation";
    }
    return "unknown";
}

SecpMethod secp_method_from_string(const std::string& s) {
    for (SecpMethod m : {SecpMethod::Auto, SecpMethod::ExactClosedForm, SecpMethod::LaplaceInversion,
                         SecpMethod::GammaApprox, SecpMethod::GammaApproxUnconditional, SecpMethod::Simulation}) {
        if (s == to_string(m)) return m;
    }
    throw ConfigError("unknown method '" + s + "'");
}

bool closed_form_applies(const TierQueue& q, int d) {
    (void)d;
    for (const auto& c : q.classes) {
        if (c.rate > 0.0 && c.packets != 1 && c.packets != 2) return false;
    }
    return true;
}

double secp(const TierQueue& q, int d, double T, SecpMethod method, SecpMethod* used) {
    if (method == SecpMethod::Auto) {
        method = closed_form_applies(q, d) ? SecpMethod::ExactClosedForm : SecpMethod::GammaApprox;
    }
    if (used) *used = method;
    switch (method) {
        case SecpMethod::ExactClosedForm: return secp_two_type(q, d, T);
        case SecpMethod::LaplaceInversion: return secp_laplace_inversion(q, d, T);
        case SecpMethod::GammaApprox: return secp_gamma_approx(q, d, T);
        case SecpMethod::GammaApproxUnconditional: return secp_gamma_approx(q, d, T, GammaFit::Unconditional);
        default: throw PreconditionError(std::string("method ") + to_string(method) + " is not analytical");
    }
}

double secp_laplace_inversion(const NetworkConfig& cfg, const QueueLoad& loads, std::size_t i, std::size_t k,
                              double T) {
    return secp_laplace_inversion(tier_queue(cfg, loads, k), cfg.user_types.at(i).task_packets, T);
}

double secp_single_type(const NetworkConfig& cfg, const QueueLoad& loads, std::size_t i, std::size_t k, double T) {
    std::size_t active = 0;
    for (std::size_t j = 0; j < cfg.num_types(); ++j) {
        if (loads.arrival_rates.at(j).at(k) > 0.0) ++active;
    }
    if (active > 1) throw PreconditionError("single-type closed form called with several active user types");
    return secp_single_type(tier_queue(cfg, loads, k), cfg.user_types.at(i).task_packets, T);
}

double secp_two_type(const NetworkConfig& cfg, const QueueLoad& loads, std::size_t i, std::size_t k, double T) {
    return secp_two_type(tier_queue(cfg, loads, k), cfg.user_types.at(i).task_packets, T);
}

double secp_gamma_approx(const NetworkConfig& cfg, const QueueLoad& loads, std::size_t i, std::size_t k, double T) {
    return secp_gamma_approx(tier_queue(cfg, loads, k), cfg.user_types.at(i).task_packets, T);
}

std::pair<double, double> takacs_moments(const NetworkConfig& cfg, const QueueLoad& loads, std::size_t k) {
    return takacs_moments(tier_queue(cfg, loads, k));
}

double scp(const NetworkConfig& cfg, const QueueLoad& loads, std::size_t i, std::size_t k, SecpMethod method) {
    return secp(tier_queue(cfg, loads, k), cfg.user_types.at(i).task_packets,
                cfg.user_types.at(i).target_latency_s / cfg.slot_s, method);
}

SecpResult overall_secp(const NetworkConfig& cfg, const BiasMatrix& bias, SecpMethod method) {
    validate(cfg, bias);
    const QueueLoad loads = compute_loads(cfg, bias);
    if (const std::size_t bad = loads.first_unstable(); bad != QueueLoad::npos) {
        throw InstabilityError(bad, loads.utilizations[bad]);
    }
    SecpResult res;
    res.utilizations = loads.utilizations;
    bool all_exact = true, all_gamma = true;
    for (std::size_t k = 0; k < cfg.num_tiers(); ++k) {
        const TierQueue q = tier_queue(cfg, loads, k);
        for (std::size_t i = 0; i < cfg.num_types(); ++i) {
            const UserTypeParams& u = cfg.user_types[i];
            PairResult p;
            p.type = i;
            p.tier = k;
            p.offload_prob = offload_probability(cfg, bias, i, k);
            const CommLatencyResult up = comm_latency(cfg, bias, i, k, Direction::Up);
            const CommLatencyResult down = comm_latency(cfg, bias, i, k, Direction::Down);
            p.rate_up = up.max_rate;
            p.rate_down = down.max_rate;
            p.latency_up = up.latency;
            p.latency_down = down.latency;
            p.arrival_rate = loads.arrival_rates[i][k];
            p.utilization = loads.utilizations[k];
            p.threshold_slots = (u.target_latency_s - up.latency - down.latency) / cfg.slot_s;
            p.secp = secp(q, u.task_packets, p.threshold_slots, method, &p.method);
            p.scp = secp(q, u.task_packets, u.target_latency_s / cfg.slot_s, method);
            all_exact = all_exact && p.method == SecpMethod::ExactClosedForm;
            all_gamma = all_gamma && p.method == SecpMethod::GammaApprox;
            res.p_s += u.portion * p.offload_prob * p.secp;
            res.p_cp += u.portion * p.offload_prob * p.scp;
            res.pairs.push_back(p);
        }
    }
    if (method != SecpMethod::Auto) {
        res.method = method;
    } else if (all_exact) {
        res.method = SecpMethod::ExactClosedForm;
    } else if (all_gamma) {
        res.method = SecpMethod::GammaApprox;
    }
    return res;
}

}  // namespace mechet
