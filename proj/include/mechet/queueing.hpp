#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "mechet/config.hpp"

namespace mechet {

/// One Poisson stream of tasks at a server: rate in tasks per slot, each task
/// `packets` exponential(mu) packets long.
struct TaskClass {
    double rate = 0.0;
    int packets = 1;
};

/// Single-server FIFO queue with Erlang service per class.
struct TierQueue {
    double service_rate = 1.0;  // mu, packets per slot
    std::vector<TaskClass> classes;
    std::size_t tier = 0;  // reported in InstabilityError

    double total_rate() const;
    double utilization() const;
    bool stable() const { return utilization() < 1.0; }
};

/// Arrival rates per (type, tier) and the resulting utilizations.
struct QueueLoad {
    std::vector<std::vector<double>> arrival_rates;  // [i][k], tasks per slot
    std::vector<double> total_rates;                 // [k]
    std::vector<double> utilizations;                // [k]

    bool stable() const;
    /// Index of the first tier with utilization >= 1, or npos.
    std::size_t first_unstable() const;
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

/// lambda_{i,k} = [beta^(u)] lambda_u p_u p_o / lambda_{m,k}.
double arrival_rate(const NetworkConfig& cfg, const BiasMatrix& bias, std::size_t i, std::size_t k);
QueueLoad compute_loads(const NetworkConfig& cfg, const BiasMatrix& bias);
double utilization(const NetworkConfig& cfg, const QueueLoad& loads, std::size_t k);
TierQueue tier_queue(const NetworkConfig& cfg, const QueueLoad& loads, std::size_t k);

using cplx = std::complex<double>;

/// Service-time Laplace transform of a task drawn from the arrival mix.
cplx service_laplace(const TierQueue& q, cplx s);
/// Waiting-time Laplace transform (Pollaczek-Khinchine).
cplx waiting_laplace(const TierQueue& q, cplx s);

/// P{W + S_d <= T}: waiting time in q plus an Erlang(d, mu) service, by
/// numerical inversion. T in slots; T <= 0 gives 0.
double secp_laplace_inversion(const TierQueue& q, int d, double T);

/// Closed form for a queue fed only by single-packet tasks (exponential
/// service), tagged task of d packets. Also accepts an empty queue.
double secp_single_type(const TierQueue& q, int d, double T);

/// Closed form for a queue whose tasks are one or two packets long, tagged
/// task of d packets, from the two poles of the waiting-time transform.
double secp_two_type(const TierQueue& q, int d, double T);

/// Mean and second moment of the waiting time, slots and slots^2.
std::pair<double, double> takacs_moments(const TierQueue& q);

/// Which moments the Gamma law is fitted to. The waiting time is an atom of
/// 1 - rho at zero plus a continuous part of mass rho; the Gamma stands in
/// for the continuous part.
enum class GammaFit {
    /// Fit to the moments of W given W > 0 (Takacs moments divided by rho),
    /// so the mixture reproduces both Takacs moments exactly.
    Conditional,
    /// Fit straight to the unconditional Takacs moments.
    Unconditional,
};

struct GammaApproxParams {
    double shape = 0.0;
    double rate = 0.0;
    double mean = 0.0;           // E[W], Takacs
    double second_moment = 0.0;  // E[W^2], Takacs
    double busy_probability = 0.0;  // rho, weight of the Gamma part
};

GammaApproxParams gamma_params(const TierQueue& q, GammaFit fit = GammaFit::Conditional);

/// Gamma-approximated waiting time combined with the Erlang service.
double secp_gamma_approx(const TierQueue& q, int d, double T, GammaFit fit = GammaFit::Conditional);

/// GammaApprox uses the conditional fit; GammaApproxUnconditional fits the
/// Gamma law straight to the unconditional moments.
enum class SecpMethod { Auto, ExactClosedForm, LaplaceInversion, GammaApprox, GammaApproxUnconditional, Simulation };

const char* to_string(SecpMethod m);
SecpMethod secp_method_from_string(const std::string& s);

/// True when a closed form applies to this queue and tagged size.
bool closed_form_applies(const TierQueue& q, int d);

/// Dispatch on method; Auto picks the closed form when it applies and the
/// Gamma approximation otherwise. Returns the method actually used.
double secp(const TierQueue& q, int d, double T, SecpMethod method, SecpMethod* used = nullptr);

// Per-pair wrappers over the loads of a configuration.
double secp_laplace_inversion(const NetworkConfig& cfg, const QueueLoad& loads, std::size_t i, std::size_t k,
                              double T);
double secp_single_type(const NetworkConfig& cfg, const QueueLoad& loads, std::size_t i, std::size_t k, double T);
double secp_two_type(const NetworkConfig& cfg, const QueueLoad& loads, std::size_t i, std::size_t k, double T);
double secp_gamma_approx(const NetworkConfig& cfg, const QueueLoad& loads, std::size_t i, std::size_t k, double T);
std::pair<double, double> takacs_moments(const NetworkConfig& cfg, const QueueLoad& loads, std::size_t k);
/// P{W + S <= T_tg} with the full target latency, no communication time.
double scp(const NetworkConfig& cfg, const QueueLoad& loads, std::size_t i, std::size_t k,
           SecpMethod method = SecpMethod::Auto);

struct PairResult {
    std::size_t type = 0;
    std::size_t tier = 0;
    double offload_prob = 0.0;
    double rate_up = 0.0;    // bits/s
    double rate_down = 0.0;  // bits/s
    double latency_up = 0.0;    // s
    double latency_down = 0.0;  // s
    double arrival_rate = 0.0;  // tasks/slot
    double utilization = 0.0;
    double threshold_slots = 0.0;  // budget left for queueing and service
    double secp = 0.0;
    double scp = 0.0;
    SecpMethod method = SecpMethod::Auto;
};

struct SecpResult {
    std::vector<PairResult> pairs;
    double p_s = 0.0;
    double p_cp = 0.0;
    SecpMethod method = SecpMethod::Auto;
    std::vector<double> utilizations;
};

/// End-to-end analysis. Throws InstabilityError naming the first unstable tier.
SecpResult overall_secp(const NetworkConfig& cfg, const BiasMatrix& bias, SecpMethod method = SecpMethod::Auto);

}  // namespace mechet
