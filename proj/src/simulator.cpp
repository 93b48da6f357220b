#include "mechet/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>
#include <deque>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <numbers>
#include <string>
#include <thread>

#include "mechet/errors.hpp"

namespace mechet {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::size_t kChunk = 4096;
constexpr double kMinOffloadForRejection = 1e-4;

// Runs fn(chunk, begin, end) over fixed-size chunks of [0, n). Each chunk owns
// its RNG stream, so the merged result does not depend on the thread count.
template <class Result, class Fn>
std::vector<Result> run_chunks(std::size_t n, unsigned threads, Fn fn) {
    const std::size_t chunks = (n + kChunk - 1) / kChunk;
    std::vector<Result> out(chunks);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t c = next++; c < chunks; c = next++) {
            out[c] = fn(c, c * kChunk, std::min(n, (c + 1) * kChunk));
        }
    };
    const unsigned t = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, chunks))));
    if (t == 1) {
        worker();
        return out;
    }
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_lock;
    for (unsigned w = 0; w < t; ++w) {
        pool.emplace_back([&] {
            try {
                worker();
            } catch (...) {
                std::lock_guard<std::mutex> g(failure_lock);
                if (!failure) failure = std::current_exception();
                next = chunks;
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
    return out;
}

double power_weighted_density(const NetworkConfig& cfg, std::size_t k) {
    double sum = 0.0;
    for (std::size_t j = 0; j < cfg.num_tiers(); ++j) {
        sum += derived_tier_density(cfg, j) *
               std::pow(cfg.tiers[j].tx_power_mw / cfg.tiers[k].tx_power_mw, 2.0 / cfg.pathloss);
    }
    return sum;
}

// SIR threshold theta with exp(-pi D y^2 Z(theta, alpha, 0)) = beta.
double operating_threshold(double interferer_density, double pathloss, double beta, double y) {
    const double c = z_integral(1.0, pathloss, 0.0);
    return std::pow(-std::log(beta) / (kPi * interferer_density * y * y * c), pathloss / 2.0);
}

double threshold_from_rate(double rate, double bandwidth) { return std::expm1(rate / bandwidth * std::numbers::ln2); }

std::vector<double> association_weights(const NetworkConfig& cfg, const BiasMatrix& bias, std::size_t i) {
    std::vector<double> w(cfg.num_tiers());
    for (std::size_t j = 0; j < w.size(); ++j) w[j] = association_weight(cfg, bias, i, j);
    return w;
}

void check_indices(const NetworkConfig& cfg, std::size_t i, std::size_t k) {
    if (i >= cfg.num_types()) throw PreconditionError("user type index out of range");
    if (k >= cfg.num_tiers()) throw PreconditionError("tier index out of range");
}

// Sum of g r^{-alpha} over a PPP on the annulus [inner, outer] around the
// receiver, g ~ Exp(1).
double ppp_interference(double density, double inner, double outer, double pathloss, double power, Rng& rng) {
    const double mean = density * kPi * (outer * outer - inner * inner);
    if (mean > kDefaultPointCap) throw ResourceError("interferer count exceeds cap");
    std::poisson_distribution<long long> count(mean);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::exponential_distribution<double> fade(1.0);
    const long long n = mean > 0.0 ? count(rng) : 0;
    const double in2 = inner * inner, span = outer * outer - in2;
    double sum = 0.0;
    for (long long p = 0; p < n; ++p) {
        const double r = std::sqrt(in2 + span * unit(rng));
        sum += power * fade(rng) * std::pow(r, -pathloss);
    }
    return sum;
}

struct PairCounts {
    std::vector<std::size_t> trials, ec, cp;
};

}  // namespace

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return Rng(seq);
}

SimEstimate binomial_estimate(std::size_t successes, std::size_t trials, std::uint64_t seed) {
    SimEstimate e;
    e.trials = trials;
    e.successes = successes;
    e.seed = seed;
    if (trials == 0) return e;
    const double p = static_cast<double>(successes) / static_cast<double>(trials);
    e.estimate = p;
    e.half_width_95 = 1.96 * std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
    return e;
}

double association_radius(const NetworkConfig& cfg, double expected_points) {
    double lam_min = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < cfg.num_tiers(); ++j) lam_min = std::min(lam_min, derived_tier_density(cfg, j));
    if (!(lam_min > 0.0)) throw PreconditionError("every tier needs a positive density");
    return std::sqrt(expected_points / (kPi * lam_min));
}

double interference_radius(const NetworkConfig& cfg) {
    if (!(cfg.server_density > 0.0)) throw PreconditionError("server density must be > 0");
    return 25.0 / (2.0 * std::sqrt(cfg.server_density));
}

SpatialSnapshot sample_snapshot(const NetworkConfig& cfg, const BiasMatrix& bias, std::size_t i, double region_radius,
                                Rng& rng) {
    SpatialSnapshot snap;
    snap.tiers.reserve(cfg.num_tiers());
    for (std::size_t j = 0; j < cfg.num_tiers(); ++j) {
        snap.tiers.push_back(sample_ppp(derived_tier_density(cfg, j), region_radius, rng));
    }
    snap.association = associate({0.0, 0.0}, snap.tiers, association_weights(cfg, bias, i), cfg.pathloss);
    return snap;
}

double uplink_rate_at_distance(const NetworkConfig& cfg, std::size_t i, std::size_t k, double y) {
    check_indices(cfg, i, k);
    if (!(y > 0.0)) throw DomainError("serving distance must be > 0");
    const double beta = cfg.user_types[i].coverage_up.at(k);
    const double theta = operating_threshold(cfg.reuse * derived_tier_density(cfg, k), cfg.pathloss, beta, y);
    return cfg.bandwidth_up_hz * std::log1p(theta) / std::numbers::ln2;
}

double downlink_rate_lb_at_distance(const NetworkConfig& cfg, std::size_t i, std::size_t k, double y) {
    check_indices(cfg, i, k);
    if (!(y > 0.0)) throw DomainError("serving distance must be > 0");
    const double beta = cfg.user_types[i].coverage_down.at(k);
    const double theta = operating_threshold(power_weighted_density(cfg, k), cfg.pathloss, beta, y);
    return cfg.bandwidth_down_hz * std::log1p(theta) / std::numbers::ln2;
}

double mean_coverage_at_operating_rate(const NetworkConfig& cfg, const BiasMatrix& bias, std::size_t i,
                                       std::size_t k, Direction direction) {
    check_indices(cfg, i, k);
    // With t = pi s y^2 the serving-distance law becomes e^{-t} dt.
    const double s = weighted_density(cfg, bias, i, k, 2.0 / cfg.pathloss);
    auto coverage = [&](double t) {
        const double y = std::sqrt(t / (kPi * s));
        if (direction == Direction::Up) {
            return uplink_rate_coverage(cfg, i, k, y, uplink_rate_at_distance(cfg, i, k, y));
        }
        return downlink_rate_coverage(cfg, bias, i, k, y, downlink_rate_lb_at_distance(cfg, i, k, y));
    };
    // Below t = 1e-12 the rate overflows; that slice carries 1e-12 of the mass.
    const double t0 = 1e-12;
    boost::math::quadrature::exp_sinh<double> integrator;
    double error = 0.0;
    const double mean =
        integrator.integrate([&](double v) { return coverage(t0 + v) * std::exp(-(t0 + v)); }, 1e-10, &error);
    if (!std::isfinite(mean)) throw NumericalError("coverage quadrature failed");
    return mean / std::exp(-t0);
}

SimEstimate simulate_coverage(const NetworkConfig& cfg, const BiasMatrix& bias, std::size_t i, std::size_t k,
                              Direction direction, std::size_t trials, std::uint64_t seed) {
    check_indices(cfg, i, k);
    if (offload_probability(cfg, bias, i, k) < kMinOffloadForRejection) {
        throw PreconditionError("offload probability of the pair is too small to sample by rejection");
    }
    const double r_assoc = association_radius(cfg);
    const double r_int = std::max(interference_radius(cfg), r_assoc);
    const double alpha = cfg.pathloss;
    const double up_density = cfg.reuse * derived_tier_density(cfg, k);
    const std::vector<double> weights = association_weights(cfg, bias, i);

    auto counts = run_chunks<std::size_t>(trials, 1, [&](std::size_t c, std::size_t b, std::size_t e) {
        Rng rng = make_rng(seed, c);
        std::exponential_distribution<double> fade(1.0);
        std::size_t hits = 0;
        for (std::size_t t = b; t < e; ++t) {
            if (direction == Direction::Up) {
                SpatialSnapshot snap;
                do {
                    snap = sample_snapshot(cfg, bias, i, r_assoc, rng);
                } while (snap.association.tier != k);
                const double y = snap.association.distance;
                const double theta = threshold_from_rate(uplink_rate_at_distance(cfg, i, k, y), cfg.bandwidth_up_hz);
                const double interference = ppp_interference(up_density, 0.0, r_int, alpha, 1.0, rng);
                if (fade(rng) * std::pow(y, -alpha) >= theta * interference) ++hits;
            } else {
                std::vector<PointSet> tiers(cfg.num_tiers());
                Association a;
                do {
                    for (std::size_t j = 0; j < tiers.size(); ++j) {
                        tiers[j] = sample_ppp(derived_tier_density(cfg, j), r_int, rng);
                    }
                    a = associate({0.0, 0.0}, tiers, weights, alpha);
                } while (a.tier != k);
                const double theta =
                    threshold_from_rate(downlink_rate_lb_at_distance(cfg, i, k, a.distance), cfg.bandwidth_down_hz);
                double interference = 0.0;
                for (std::size_t j = 0; j < tiers.size(); ++j) {
                    const auto& pts = tiers[j].points;
                    for (std::size_t sidx = 0; sidx < pts.size(); ++sidx) {
                        if (j == a.tier && sidx == a.server) continue;
                        const double r = std::hypot(pts[sidx].x, pts[sidx].y);
                        interference += cfg.tiers[j].tx_power_mw * fade(rng) * std::pow(r, -alpha);
                    }
                }
                const double signal = cfg.tiers[k].tx_power_mw * fade(rng) * std::pow(a.distance, -alpha);
                if (signal >= theta * interference) ++hits;
            }
        }
        return hits;
    });
    std::size_t hits = 0;
    for (auto h : counts) hits += h;
    return binomial_estimate(hits, trials, seed);
}

SimEstimate simulate_coverage_at(const NetworkConfig& cfg, const BiasMatrix& bias, std::size_t i, std::size_t k,
                                 Direction direction, double y, double rate, std::size_t trials,
                                 std::uint64_t seed) {
    check_indices(cfg, i, k);
    if (!(y > 0.0)) throw DomainError("serving distance must be > 0");
    if (!(rate >= 0.0)) throw DomainError("rate must be >= 0");
    const double alpha = cfg.pathloss;
    const double r_int = std::max(interference_radius(cfg), 25.0 * y);
    const double bandwidth = direction == Direction::Up ? cfg.bandwidth_up_hz : cfg.bandwidth_down_hz;
    const double theta = threshold_from_rate(rate, bandwidth);

    auto counts = run_chunks<std::size_t>(trials, 1, [&](std::size_t c, std::size_t b, std::size_t e) {
        Rng rng = make_rng(seed, c);
        std::exponential_distribution<double> fade(1.0);
        std::size_t hits = 0;
        for (std::size_t t = b; t < e; ++t) {
            double interference = 0.0, signal = 0.0;
            if (direction == Direction::Up) {
                interference =
                    ppp_interference(cfg.reuse * derived_tier_density(cfg, k), 0.0, r_int, alpha, 1.0, rng);
                signal = fade(rng) * std::pow(y, -alpha);
            } else {
                for (std::size_t j = 0; j < cfg.num_tiers(); ++j) {
                    // Association guard: no tier-j server is closer than this.
                    const double guard = y * std::pow(weight_ratio(cfg, bias, i, j, k), 1.0 / alpha);
                    interference += ppp_interference(derived_tier_density(cfg, j), guard, std::max(r_int, 25.0 * guard),
                                                     alpha, cfg.tiers[j].tx_power_mw, rng);
                }
                signal = cfg.tiers[k].tx_power_mw * fade(rng) * std::pow(y, -alpha);
            }
            if (signal >= theta * interference) ++hits;
        }
        return hits;
    });
    std::size_t hits = 0;
    for (auto h : counts) hits += h;
    return binomial_estimate(hits, trials, seed);
}

std::vector<double> QueueTrace::waits() const {
    std::vector<double> w;
    w.reserve(records.size());
    for (const auto& r : records) w.push_back(r.wait());
    return w;
}

double QueueTrace::mean_wait() const {
    if (records.empty()) return 0.0;
    double s = 0.0;
    for (const auto& r : records) s += r.wait();
    return s / static_cast<double>(records.size());
}

double QueueTrace::mean_sojourn() const {
    if (records.empty()) return 0.0;
    double s = 0.0;
    for (const auto& r : records) s += r.sojourn();
    return s / static_cast<double>(records.size());
}

namespace {

struct Event {
    double time;
    std::uint64_t seq;
    bool departure;
    std::size_t task_class;
};

bool earlier(const Event& a, const Event& b) { return a.time != b.time ? a.time < b.time : a.seq < b.seq; }

// Pending events: one arrival per class plus at most one departure, so a
// linear scan in (time, seq) order beats a heap.
class EventList {
public:
    void push(const Event& e) { events_.push_back(e); }
    bool empty() const { return events_.empty(); }
    const Event& top() {
        best_ = 0;
        for (std::size_t n = 1; n < events_.size(); ++n) {
            if (earlier(events_[n], events_[best_])) best_ = n;
        }
        return events_[best_];
    }
    // Removes the event last returned by top().
    void pop() {
        events_[best_] = events_.back();
        events_.pop_back();
    }

private:
    std::vector<Event> events_;
    std::size_t best_ = 0;
};

// Runs the queue to the horizon, calling on_departure for every task that
// arrived at or after warmup and left by the horizon.
template <class OnDeparture>
void run_queue(const TierQueue& q, double horizon, double warmup, Rng& rng, OnDeparture on_departure,
               double& area, std::size_t& arrivals) {
    EventList events;
    std::uint64_t seq = 0;
    std::vector<std::exponential_distribution<double>> gaps;
    for (const auto& c : q.classes) gaps.emplace_back(c.rate > 0.0 ? c.rate : 1.0);
    for (std::size_t c = 0; c < q.classes.size(); ++c) {
        if (q.classes[c].rate > 0.0) events.push({gaps[c](rng), seq++, false, c});
    }
    auto service_time = [&](int packets) {
        std::gamma_distribution<double> g(packets, 1.0 / q.service_rate);
        return g(rng);
    };

    std::deque<TaskRecord> waiting;
    TaskRecord current;
    bool busy = false;
    double last = 0.0;
    area = 0.0;
    arrivals = 0;

    auto start = [&](TaskRecord rec, double now) {
        rec.start = now;
        current = rec;
        busy = true;
        events.push({now + service_time(rec.packets), seq++, true, rec.task_class});
    };

    while (!events.empty()) {
        const Event ev = events.top();
        if (ev.time > horizon) break;
        events.pop();
        const double lo = std::max(last, warmup);
        if (ev.time > lo) area += static_cast<double>(waiting.size() + (busy ? 1 : 0)) * (ev.time - lo);
        last = ev.time;
        if (!ev.departure) {
            const auto& cls = q.classes[ev.task_class];
            TaskRecord rec;
            rec.task_class = ev.task_class;
            rec.packets = cls.packets;
            rec.arrival = ev.time;
            if (ev.time >= warmup) ++arrivals;
            if (busy) {
                waiting.push_back(rec);
            } else {
                start(rec, ev.time);
            }
            events.push({ev.time + gaps[ev.task_class](rng), seq++, false, ev.task_class});
        } else {
            current.departure = ev.time;
            busy = false;
            if (current.arrival >= warmup) on_departure(current);
            if (!waiting.empty()) {
                TaskRecord next = waiting.front();
                waiting.pop_front();
                start(next, ev.time);
            }
        }
    }
    const double lo = std::max(last, warmup);
    if (horizon > lo) area += static_cast<double>(waiting.size() + (busy ? 1 : 0)) * (horizon - lo);
}

void check_queue_options(const TierQueue& q, double horizon, double warmup) {
    if (!(q.service_rate > 0.0)) throw DomainError("service rate must be > 0");
    if (!(horizon > 0.0) || !(warmup >= 0.0) || !(warmup < horizon)) {
        throw DomainError("need 0 <= warmup < horizon");
    }
    for (const auto& c : q.classes) {
        if (!(c.rate >= 0.0)) throw DomainError("arrival rates must be >= 0");
        if (c.packets < 1) throw DomainError("task sizes must be >= 1 packet");
    }
}

}  // namespace

QueueTrace simulate_queue(const TierQueue& q, const QueueSimOptions& opt) {
    check_queue_options(q, opt.horizon, opt.warmup);
    QueueTrace trace;
    trace.tier = q.tier;
    trace.window = opt.horizon - opt.warmup;
    trace.unstable = !q.stable();
    Rng rng = make_rng(opt.seed, opt.stream);
    double area = 0.0;
    run_queue(
        q, opt.horizon, opt.warmup, rng, [&](const TaskRecord& r) { trace.records.push_back(r); }, area,
        trace.arrivals_in_window);
    trace.mean_in_system = area / trace.window;
    return trace;
}

QueueTrace simulate_queue(const NetworkConfig& cfg, const QueueLoad& loads, std::size_t k, double horizon,
                          double warmup, std::uint64_t seed) {
    QueueSimOptions opt;
    opt.horizon = horizon;
    opt.warmup = warmup;
    opt.seed = seed;
    opt.stream = 1000000 + k;
    return simulate_queue(tier_queue(cfg, loads, k), opt);
}

void write_trace_csv(const std::string& path, const std::vector<QueueTrace>& traces) {
    std::ofstream out(path);
    if (!out) throw ResourceError("cannot open trace file " + path);
    out << std::setprecision(17);
    out << "server_id,tier,type,arrival,start,departure\n";
    for (std::size_t s = 0; s < traces.size(); ++s) {
        for (const auto& r : traces[s].records) {
            out << s + 1 << ',' << traces[s].tier + 1 << ',' << r.task_class + 1 << ',' << r.arrival << ',' << r.start
                << ',' << r.departure << '\n';
        }
    }
    if (!out) throw ResourceError("failed writing trace file " + path);
}

double horizon_scale(double rho) {
    if (!(rho > 0.9)) return 1.0;
    if (rho >= 1.0) return 25.0;
    const double r = 0.1 / (1.0 - rho);
    return std::min(25.0, r * r);
}

SimSecpResult simulate_secp(const NetworkConfig& cfg, const BiasMatrix& bias, const SimulationOptions& opt) {
    validate(cfg, bias);
    if (opt.trials == 0) throw DomainError("trials must be > 0");
    const std::size_t I = cfg.num_types(), K = cfg.num_tiers();
    const QueueLoad loads = compute_loads(cfg, bias);

    SimSecpResult result;
    result.utilizations = loads.utilizations;
    result.unstable_tiers.assign(K, false);

    // Latency budgets in slots per pair.
    std::vector<double> budget_ec(I * K, 0.0), budget_cp(I * K, 0.0);
    for (std::size_t i = 0; i < I; ++i) {
        const double target = cfg.user_types[i].target_latency_s;
        for (std::size_t k = 0; k < K; ++k) {
            if (offload_probability(cfg, bias, i, k) <= 0.0) continue;
            const double comm = opt.include_comm_latency ? total_comm_latency(cfg, bias, i, k) : 0.0;
            budget_ec[i * K + k] = (target - comm) / cfg.slot_s;
            budget_cp[i * K + k] = target / cfg.slot_s;
        }
    }

    // Per pair: departures seen and how many met each budget. A trial that
    // picks a uniformly random departure succeeds iff its rank in sojourn
    // order is below the count, so these counts stand in for the samples.
    // An unstable tier has no stationary law; its trials count as misses.
    std::vector<std::size_t> seen(I * K, 0), met_ec(I * K, 0), met_cp(I * K, 0);
    auto des = [&](std::size_t k) {
        const TierQueue q = tier_queue(cfg, loads, k);
        if (!q.stable()) return;
        const double scale = opt.scale_horizon_with_load ? horizon_scale(q.utilization()) : 1.0;
        check_queue_options(q, opt.horizon * scale, opt.warmup * scale);
        Rng rng = make_rng(opt.seed, 1000000 + k);
        double area = 0.0;
        std::size_t arrivals = 0;
        run_queue(
            q, opt.horizon * scale, opt.warmup * scale, rng,
            [&](const TaskRecord& r) {
                const std::size_t x = r.task_class * K + k;
                const double s = r.sojourn();
                ++seen[x];
                met_ec[x] += s <= budget_ec[x];
                met_cp[x] += s <= budget_cp[x];
            },
            area, arrivals);
    };
    for (std::size_t k = 0; k < K; ++k) {
        if (loads.utilizations[k] >= 1.0) {
            result.unstable_tiers[k] = true;
            result.stable = false;
        }
    }
    if (opt.threads > 1 && K > 1) {
        std::vector<std::thread> pool;
        std::exception_ptr failure;
        std::mutex lock;
        for (std::size_t k = 0; k < K; ++k) {
            pool.emplace_back([&, k] {
                try {
                    des(k);
                } catch (...) {
                    std::lock_guard<std::mutex> g(lock);
                    if (!failure) failure = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        if (failure) std::rethrow_exception(failure);
    } else {
        for (std::size_t k = 0; k < K; ++k) des(k);
    }

    std::vector<double> portions(I);
    for (std::size_t i = 0; i < I; ++i) portions[i] = cfg.user_types[i].portion;
    const double r_assoc = association_radius(cfg);

    auto chunks = run_chunks<PairCounts>(opt.trials, opt.threads, [&](std::size_t c, std::size_t b, std::size_t e) {
        Rng rng = make_rng(opt.seed, c);
        std::discrete_distribution<std::size_t> pick_type(portions.begin(), portions.end());
        PairCounts pc;
        pc.trials.assign(I * K, 0);
        pc.ec.assign(I * K, 0);
        pc.cp.assign(I * K, 0);
        for (std::size_t t = b; t < e; ++t) {
            const std::size_t i = pick_type(rng);
            const std::size_t k = sample_snapshot(cfg, bias, i, r_assoc, rng).association.tier;
            const std::size_t idx = i * K + k;
            ++pc.trials[idx];
            if (result.unstable_tiers[k]) continue;
            if (seen[idx] == 0) {
                throw NumericalError("no type " + std::to_string(i + 1) + " tasks observed at tier " +
                                     std::to_string(k + 1) + "; increase the horizon");
            }
            std::uniform_int_distribution<std::size_t> pick(0, seen[idx] - 1);
            const std::size_t rank = pick(rng);
            if (rank < met_ec[idx]) ++pc.ec[idx];
            if (rank < met_cp[idx]) ++pc.cp[idx];
        }
        return pc;
    });

    std::vector<std::size_t> n(I * K, 0), ec(I * K, 0), cp(I * K, 0);
    for (const auto& pc : chunks) {
        for (std::size_t x = 0; x < I * K; ++x) {
            n[x] += pc.trials[x];
            ec[x] += pc.ec[x];
            cp[x] += pc.cp[x];
        }
    }
    std::size_t ec_total = 0, cp_total = 0;
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t i = 0; i < I; ++i) {
            const std::size_t x = i * K + k;
            SimPairEstimate p;
            p.type = i;
            p.tier = k;
            p.trials = n[x];
            p.secp = binomial_estimate(ec[x], n[x], opt.seed);
            p.scp = binomial_estimate(cp[x], n[x], opt.seed);
            result.pairs.push_back(p);
            ec_total += ec[x];
            cp_total += cp[x];
        }
    }
    result.p_s = binomial_estimate(ec_total, opt.trials, opt.seed);
    result.p_cp = binomial_estimate(cp_total, opt.trials, opt.seed);
    return result;
}

}  // namespace mechet
