#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mechet/comms.hpp"
#include "mechet/config.hpp"
#include "mechet/geometry.hpp"
#include "mechet/queueing.hpp"

namespace mechet {

/// Independent RNG stream for (seed, stream id).
Rng make_rng(std::uint64_t seed, std::uint64_t stream);

struct SimEstimate {
    double estimate = 0.0;
    double half_width_95 = 0.0;  // 1.96 sqrt(p(1-p)/n)
    std::size_t trials = 0;
    std::uint64_t seed = 0;
    std::size_t successes = 0;

    bool contains(double p) const { return p >= estimate - half_width_95 && p <= estimate + half_width_95; }
};

SimEstimate binomial_estimate(std::size_t successes, std::size_t trials, std::uint64_t seed);

/// One spatial realization seen from a user at the origin.
struct SpatialSnapshot {
    std::vector<PointSet> tiers;
    Association association;
};

/// Samples every tier on a disc and associates a type-i user at the origin.
SpatialSnapshot sample_snapshot(const NetworkConfig& cfg, const BiasMatrix& bias, std::size_t i, double region_radius,
                                Rng& rng);

/// Radius around the origin holding `expected_points` points of the
/// sparsest tier on average.
double association_radius(const NetworkConfig& cfg, double expected_points = 40.0);
/// Radius for interference sums: 25 times the typical nearest-server distance.
double interference_radius(const NetworkConfig& cfg);

/// Per-distance rate that meets the coverage target on each link.
double uplink_rate_at_distance(const NetworkConfig& cfg, std::size_t i, std::size_t k, double y);
double downlink_rate_lb_at_distance(const NetworkConfig& cfg, std::size_t i, std::size_t k, double y);

/// Analytical coverage at the per-distance operating rate, averaged over the
/// serving distance. Equal to the coverage target on the uplink; on the
/// downlink it is the exact coverage at the lower-bound rate.
double mean_coverage_at_operating_rate(const NetworkConfig& cfg, const BiasMatrix& bias, std::size_t i,
                                       std::size_t k, Direction direction);

/// Monte Carlo SIR coverage at the operating rate, over snapshots in which
/// the type-i user associates with tier k. Uplink interferers form an
/// independent PPP of density reuse * lambda_{m,k} around the server;
/// downlink interferers are the sampled servers other than the serving one.
SimEstimate simulate_coverage(const NetworkConfig& cfg, const BiasMatrix& bias, std::size_t i, std::size_t k,
                              Direction direction, std::size_t trials, std::uint64_t seed);

/// Monte Carlo coverage for a fixed serving distance and rate.
SimEstimate simulate_coverage_at(const NetworkConfig& cfg, const BiasMatrix& bias, std::size_t i, std::size_t k,
                                 Direction direction, double y, double rate, std::size_t trials, std::uint64_t seed);

struct TaskRecord {
    std::size_t task_class = 0;
    int packets = 1;
    double arrival = 0.0;
    double start = 0.0;
    double departure = 0.0;

    double wait() const { return start - arrival; }
    double service() const { return departure - start; }
    double sojourn() const { return departure - arrival; }
};

struct QueueTrace {
    std::vector<TaskRecord> records;  // tasks arriving after warmup that departed by the horizon
    double window = 0.0;              // observation window length (horizon - warmup)
    double mean_in_system = 0.0;      // time average over the window
    std::size_t arrivals_in_window = 0;
    std::size_t tier = 0;
    bool unstable = false;  // utilization >= 1; the trace is still produced

    std::vector<double> waits() const;
    double mean_wait() const;
    double mean_sojourn() const;
};

struct QueueSimOptions {
    double horizon = 1e6;  // slots
    double warmup = 1e5;   // slots
    std::uint64_t seed = 1;
    std::uint64_t stream = 0;
};

/// Event-driven FIFO single server: Poisson arrivals per class, Erlang
/// service, events ordered by (time, sequence).
QueueTrace simulate_queue(const TierQueue& q, const QueueSimOptions& opt);
QueueTrace simulate_queue(const NetworkConfig& cfg, const QueueLoad& loads, std::size_t k, double horizon,
                          double warmup, std::uint64_t seed);

/// One CSV row per departure: server_id,tier,type,arrival,start,departure.
void write_trace_csv(const std::string& path, const std::vector<QueueTrace>& traces);

struct SimulationOptions {
    std::size_t trials = 100000;
    std::uint64_t seed = 1;
    double horizon = 1e6;
    double warmup = 1e5;
    unsigned threads = 1;
    bool include_comm_latency = true;
    // Stretch horizon and warmup of tiers above rho = 0.9, see horizon_scale.
    bool scale_horizon_with_load = true;
};

/// Horizon multiplier for a queue at utilization rho: 1 up to 0.9, then
/// ((1 - 0.9) / (1 - rho))^2 capped at 25, tracking the relaxation time.
double horizon_scale(double rho);

struct SimPairEstimate {
    std::size_t type = 0;
    std::size_t tier = 0;
    std::size_t trials = 0;  // snapshots that produced this pair
    SimEstimate secp;
    SimEstimate scp;
};

struct SimSecpResult {
    SimEstimate p_s;
    SimEstimate p_cp;
    std::vector<SimPairEstimate> pairs;
    std::vector<double> utilizations;
    std::vector<bool> unstable_tiers;
    bool stable = true;
    SecpMethod method = SecpMethod::Simulation;
};

/// End-to-end Monte Carlo: a random user type and snapshot per trial picks
/// the tier; waiting and service times come from a random task of that type
/// in a long discrete-event run of the tier's queue; communication latency is
/// the analytical one.
SimSecpResult simulate_secp(const NetworkConfig& cfg, const BiasMatrix& bias, const SimulationOptions& opt);

}  // namespace mechet
