#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "mechet/errors.hpp"
#include "mechet/simulator.hpp"

using namespace mechet;

namespace {

// Mean and standard error from batch means, for correlated queue output.
struct BatchMean {
    double mean = 0.0;
    double se = 0.0;
};

template <typename Fn>
BatchMean batch_mean(const std::vector<TaskRecord>& r, Fn value, std::size_t batches = 25) {
    const std::size_t per = r.size() / batches;
    std::vector<double> means;
    for (std::size_t b = 0; b < batches; ++b) {
        double s = 0.0;
        for (std::size_t n = b * per; n < (b + 1) * per; ++n) s += value(r[n]);
        means.push_back(s / static_cast<double>(per));
    }
    BatchMean out;
    for (double m : means) out.mean += m / batches;
    double var = 0.0;
    for (double m : means) var += (m - out.mean) * (m - out.mean) / (batches - 1);
    out.se = std::sqrt(var / batches);
    return out;
}

NetworkConfig small_network() {
    NetworkConfig c = default_scenario().network;
    c.user_density = 6e-5;
    c.packet_bits = 800.0;
    return c;
}

}  // namespace

TEST_CASE("RNG streams are reproducible and distinct") {
    Rng a = make_rng(7, 3), b = make_rng(7, 3), c = make_rng(7, 4), d = make_rng(8, 3);
    const auto x = a();
    CHECK(x == b());
    CHECK(x != c());
    CHECK(x != d());
}

TEST_CASE("binomial estimate") {
    const SimEstimate e = binomial_estimate(900, 1000, 5);
    CHECK(e.estimate == doctest::Approx(0.9));
    CHECK(e.half_width_95 == doctest::Approx(1.96 * std::sqrt(0.9 * 0.1 / 1000)));
    CHECK(e.trials == 1000);
    CHECK(e.seed == 5);
    CHECK(e.contains(0.91));
    CHECK_FALSE(e.contains(0.95));
    CHECK(binomial_estimate(0, 0, 1).half_width_95 == 0.0);
}

TEST_CASE("queue trace obeys FIFO order and Little's law") {
    const TierQueue q{3.0, {{0.6, 1}, {0.45, 2}}, 1};
    const QueueTrace t = simulate_queue(q, {4e5, 4e4, 11, 0});
    REQUIRE(t.records.size() > 100000);
    CHECK_FALSE(t.unstable);
    CHECK(t.tier == 1);
    double last_departure = 0.0, last_arrival = 0.0;
    for (const TaskRecord& r : t.records) {
        CHECK(r.arrival >= last_arrival);
        CHECK(r.start >= r.arrival);
        CHECK(r.start >= last_departure - 1e-9);
        CHECK(r.departure > r.start);
        last_arrival = r.arrival;
        last_departure = r.departure;
    }
    const BatchMean w = batch_mean(t.records, [](const TaskRecord& r) { return r.sojourn(); });
    const double lambda = static_cast<double>(t.arrivals_in_window) / t.window;
    CHECK(lambda == doctest::Approx(q.total_rate()).epsilon(0.01));
    CHECK(std::abs(t.mean_in_system - lambda * w.mean) < 3.0 * lambda * w.se);
}

TEST_CASE("simulated mean wait matches the Takacs mean") {
    for (const TierQueue& q : {TierQueue{9.0, {{4.0, 1}}, 0}, TierQueue{3.0, {{0.6, 1}, {0.45, 2}}, 0},
                               TierQueue{5.0, {{0.5, 1}, {0.3, 2}, {0.4, 3}}, 0}}) {
        const QueueTrace t = simulate_queue(q, {5e5, 5e4, 3, 0});
        const BatchMean w = batch_mean(t.records, [](const TaskRecord& r) { return r.wait(); });
        const double expected = takacs_moments(q).first;
        CAPTURE(q.utilization());
        CHECK(std::abs(w.mean - expected) < 3.0 * w.se);
        // Service times are independent Erlang(packets, mu) draws, so the iid
        // standard error applies: the scaled variable has variance 1 / packets.
        double sum = 0.0, var = 0.0;
        for (const TaskRecord& r : t.records) {
            sum += r.service() * q.service_rate / r.packets;
            var += 1.0 / r.packets;
        }
        const double n = static_cast<double>(t.records.size());
        CHECK(std::abs(sum / n - 1.0) < 4.0 * std::sqrt(var) / n);
    }
}

TEST_CASE("per-class sojourn distribution matches the inverted transform") {
    const TierQueue q{3.0, {{0.6, 1}, {0.45, 2}}, 0};
    const QueueTrace t = simulate_queue(q, {5e5, 5e4, 19, 0});
    for (std::size_t cls = 0; cls < 2; ++cls) {
        std::vector<TaskRecord> mine;
        for (const TaskRecord& r : t.records) {
            if (r.task_class == cls) mine.push_back(r);
        }
        for (double T : {0.3, 1.0, 2.5}) {
            const BatchMean p = batch_mean(mine, [T](const TaskRecord& r) { return r.sojourn() <= T ? 1.0 : 0.0; });
            const double expected = secp_laplace_inversion(q, q.classes[cls].packets, T);
            CAPTURE(cls);
            CAPTURE(T);
            CHECK(std::abs(p.mean - expected) < 3.0 * p.se + 1e-3);
        }
    }
}

TEST_CASE("queue simulation options and instability") {
    const TierQueue q{1.0, {{1.2, 1}}, 2};
    const QueueTrace t = simulate_queue(q, {2e3, 1e2, 1, 0});
    CHECK(t.unstable);
    CHECK_THROWS_AS(simulate_queue(q, {10.0, 20.0, 1, 0}), DomainError);
}

TEST_CASE("trace CSV layout") {
    const TierQueue q{3.0, {{0.6, 1}, {0.45, 2}}, 1};
    const QueueTrace t = simulate_queue(q, {200.0, 10.0, 4, 0});
    const auto path = std::filesystem::temp_directory_path() / "mechet_trace.csv";
    write_trace_csv(path.string(), {t});
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    if (!header.empty() && header.back() == '\r') header.pop_back();
    CHECK(header == "server_id,tier,type,arrival,start,departure");
    std::size_t rows = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) ++rows;
        if (rows == 1) CHECK(line.rfind("1,2,", 0) == 0);
    }
    CHECK(rows == t.records.size());
    std::filesystem::remove(path);
}

TEST_CASE("uplink coverage at the operating rate is the coverage target") {
    const NetworkConfig c = small_network();
    BiasMatrix b(2, 2);
    b.set_db(0, 1, 6.0);
    CHECK(mean_coverage_at_operating_rate(c, b, 0, 1, Direction::Up) == doctest::Approx(0.95).epsilon(1e-9));
    const SimEstimate e = simulate_coverage(c, b, 0, 1, Direction::Up, 20000, 3);
    CHECK(std::abs(e.estimate - 0.95) < 1.5 * e.half_width_95);
}

TEST_CASE("downlink coverage Monte Carlo matches the exact coverage") {
    const NetworkConfig c = small_network();
    BiasMatrix b(2, 2);
    b.set_db(1, 1, 5.0);
    for (std::size_t k : {0u, 1u}) {
        const double y = 40.0, rate = 8e6;
        const double exact = downlink_rate_coverage(c, b, 1, k, y, rate);
        const SimEstimate e = simulate_coverage_at(c, b, 1, k, Direction::Down, y, rate, 20000, 9 + k);
        CAPTURE(k);
        CHECK(std::abs(e.estimate - exact) < 1.5 * e.half_width_95);
        CHECK(exact > 0.1);
        CHECK(exact < 0.99);
    }
    const double up = uplink_rate_coverage(c, 0, 1, 60.0, 2e6);
    const SimEstimate e = simulate_coverage_at(c, b, 0, 1, Direction::Up, 60.0, 2e6, 20000, 4);
    CHECK(std::abs(e.estimate - up) < 1.5 * e.half_width_95);
}

TEST_CASE("end-to-end simulation agrees with the analysis") {
    const NetworkConfig c = small_network();
    BiasMatrix b(2, 2);
    b.set_db(0, 1, 4.0);
    b.set_db(1, 1, 2.0);
    SimulationOptions opt;
    opt.trials = 60000;
    opt.horizon = 3e5;
    opt.warmup = 3e4;
    opt.seed = 21;
    const SimSecpResult sim = simulate_secp(c, b, opt);
    const SecpResult ana = overall_secp(c, b, SecpMethod::LaplaceInversion);
    CHECK(sim.stable);
    // Binomial CI plus an allowance for the finite queue run.
    CHECK(std::abs(sim.p_s.estimate - ana.p_s) < sim.p_s.half_width_95 + 0.005);
    CHECK(std::abs(sim.p_cp.estimate - ana.p_cp) < sim.p_cp.half_width_95 + 0.005);
    REQUIRE(sim.pairs.size() == ana.pairs.size());
    std::size_t trials = 0;
    for (std::size_t n = 0; n < sim.pairs.size(); ++n) {
        CHECK(sim.pairs[n].type == ana.pairs[n].type);
        CHECK(sim.pairs[n].tier == ana.pairs[n].tier);
        trials += sim.pairs[n].trials;
    }
    CHECK(trials == opt.trials);
    CHECK(sim.p_s.estimate <= sim.p_cp.estimate);
}

TEST_CASE("simulation results do not depend on the thread count") {
    const NetworkConfig c = small_network();
    const BiasMatrix b(2, 2);
    SimulationOptions opt;
    opt.trials = 10000;
    opt.horizon = 2e4;
    opt.warmup = 2e3;
    const SimSecpResult one = simulate_secp(c, b, opt);
    opt.threads = 3;
    const SimSecpResult three = simulate_secp(c, b, opt);
    CHECK(one.p_s.successes == three.p_s.successes);
    CHECK(one.p_cp.successes == three.p_cp.successes);
    opt.seed = 2;
    CHECK(simulate_secp(c, b, opt).p_s.successes != one.p_s.successes);
}

TEST_CASE("unstable tiers are flagged and count as misses") {
    NetworkConfig c = small_network();
    c.user_density = 3e-4;
    const BiasMatrix b(2, 2);
    SimulationOptions opt;
    opt.trials = 5000;
    opt.horizon = 1e4;
    opt.warmup = 1e3;
    const SimSecpResult r = simulate_secp(c, b, opt);
    CHECK_FALSE(r.stable);
    CHECK(std::any_of(r.unstable_tiers.begin(), r.unstable_tiers.end(), [](bool u) { return u; }));
    for (const SimPairEstimate& p : r.pairs) {
        if (r.unstable_tiers[p.tier]) CHECK(p.secp.successes == 0);
    }
}
