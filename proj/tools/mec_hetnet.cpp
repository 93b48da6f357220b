// Command-line front end: analyze, simulate, sweep and ncc.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mechet/errors.hpp"
#include "mechet/optimizer.hpp"
#include "mechet/queueing.hpp"
#include "mechet/report.hpp"
#include "mechet/simulator.hpp"

namespace fs = std::filesystem;
using namespace mechet;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

enum Exit { kOk = 0, kUsage = 1, kUnstable = 2, kNumerical = 3 };

struct Common {
    std::string config;
    std::vector<std::string> bias;
    std::uint64_t seed = 1;
    std::size_t trials = 100000;
    unsigned threads = 1;
    std::string out_dir;
};

struct Run {
    std::string command;
    Scenario scenario;
    std::string hash;
    fs::path out;
    std::vector<std::string> outputs;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
};

// "i,k,valdB" with 1-based indices.
void apply_bias_override(BiasMatrix& b, const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ',');) parts.push_back(p);
    if (parts.size() != 3) throw ConfigError("--bias: expected i,k,valdB, got '" + text + "'");
    long i = 0, k = 0;
    double db = 0.0;
    try {
        i = std::stol(parts[0]);
        k = std::stol(parts[1]);
        db = std::stod(parts[2]);
    } catch (const std::exception&) {
        throw ConfigError("--bias: cannot parse '" + text + "'");
    }
    if (i < 1 || k < 1 || static_cast<std::size_t>(i) > b.types() || static_cast<std::size_t>(k) > b.tiers()) {
        throw ConfigError("--bias: index out of range in '" + text + "'");
    }
    if (!std::isfinite(db)) throw ConfigError("--bias: value must be finite in '" + text + "'");
    b.set_db(static_cast<std::size_t>(i - 1), static_cast<std::size_t>(k - 1), db);
}

Run start_run(const std::string& command, const Common& c) {
    Run r;
    r.command = command;
    r.scenario = c.config.empty() ? default_scenario() : load_config(c.config);
    for (const auto& o : c.bias) apply_bias_override(r.scenario.bias, o);
    validate(r.scenario.network, r.scenario.bias);
    r.hash = config_hash(r.scenario);
    std::string dir = c.out_dir;
    if (dir.empty()) {
        const char* env = std::getenv("MEC_HETNET_OUT");
        dir = env && *env ? env : ".";
    }
    r.out = dir;
    std::error_code ec;
    fs::create_directories(r.out, ec);
    if (ec) throw ConfigError("--out-dir: cannot create " + dir + ": " + ec.message());
    return r;
}

void write_text(Run& r, const std::string& name, const std::string& body) {
    const fs::path p = r.out / name;
    std::ofstream f(p, std::ios::binary);
    if (!f) throw ResourceError("cannot open " + p.string());
    f << body;
    if (!f) throw ResourceError("failed writing " + p.string());
    r.outputs.push_back(p.string());
}

void write_json(Run& r, const std::string& name, const json& j) { write_text(r, name, j.dump(2) + "\n"); }

json bias_json(const BiasMatrix& b) {
    json rows = json::array();
    for (std::size_t i = 0; i < b.types(); ++i) {
        json row = json::array();
        for (std::size_t k = 0; k < b.tiers(); ++k) row.push_back(b.db(i, k));
        rows.push_back(row);
    }
    return rows;
}

void finish_run(Run& r, const Common& c, json extra = json::object()) {
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - r.start).count();
    const fs::path p = r.out / "manifest.json";
    json m{{"command", r.command},
           {"config", c.config.empty() ? "<defaults>" : c.config},
           {"config_hash", r.hash},
           {"bias_db", bias_json(r.scenario.bias)},
           {"seed", c.seed},
           {"threads", c.threads},
           {"tool_version", kVersion},
           {"wall_time_s", wall}};
    for (auto& [key, value] : extra.items()) m[key] = value;
    std::vector<std::string> files = r.outputs;
    files.push_back(p.string());
    m["outputs"] = files;
    std::ofstream f(p, std::ios::binary);
    if (!f) throw ResourceError("cannot open " + p.string());
    f << m.dump(2) << "\n";
}

int cmd_analyze(const Common& c, const std::string& method_name) {
    Run r = start_run("analyze", c);
    const SecpMethod method = secp_method_from_string(method_name);
    if (method == SecpMethod::Simulation) throw ConfigError("--secp-method: use the simulate command for simulation");
    const SecpResult res = overall_secp(r.scenario.network, r.scenario.bias, method);

    std::string csv = csv_row({"type", "tier", "p_o", "rate_up", "rate_down", "t_cm_up", "t_cm_down", "arrival_rate",
                               "rho", "p_ec", "p_cp", "method"});
    std::printf("%4s %4s %10s %12s %12s %11s %11s %10s %8s %9s %9s  %s\n", "type", "tier", "p_o", "rate_up",
                "rate_down", "t_cm_up", "t_cm_down", "lambda", "rho", "p_ec", "p_cp", "method");
    for (const PairResult& p : res.pairs) {
        csv += csv_row({std::to_string(p.type + 1), std::to_string(p.tier + 1), format_double(p.offload_prob),
                        format_double(p.rate_up), format_double(p.rate_down), format_double(p.latency_up),
                        format_double(p.latency_down), format_double(p.arrival_rate), format_double(p.utilization),
                        format_double(p.secp), format_double(p.scp), to_string(p.method)});
        std::printf("%4zu %4zu %10.6f %12.5g %12.5g %11.4g %11.4g %10.5g %8.5f %9.6f %9.6f  %s\n", p.type + 1,
                    p.tier + 1, p.offload_prob, p.rate_up, p.rate_down, p.latency_up, p.latency_down, p.arrival_rate,
                    p.utilization, p.secp, p.scp, to_string(p.method));
    }
    std::printf("p_s = %.6f  p_cp = %.6f  (%s)\n", res.p_s, res.p_cp, to_string(res.method));
    write_text(r, "analyze.csv", csv);
    write_json(r, "analyze.json",
               {{"p_s", res.p_s},
                {"p_cp", res.p_cp},
                {"method", to_string(res.method)},
                {"utilizations", res.utilizations},
                {"config_hash", r.hash}});
    finish_run(r, c);
    return kOk;
}

int cmd_simulate(const Common& c, double horizon, double warmup, bool trace, double trace_horizon) {
    Run r = start_run("simulate", c);
    SimulationOptions opt;
    opt.trials = c.trials;
    opt.seed = c.seed;
    opt.threads = c.threads;
    opt.horizon = horizon;
    opt.warmup = warmup;
    const SimSecpResult res = simulate_secp(r.scenario.network, r.scenario.bias, opt);

    std::string csv = csv_row({"type", "tier", "trials", "p_ec", "p_ec_ci95", "p_cp", "p_cp_ci95"});
    for (const SimPairEstimate& p : res.pairs) {
        csv += csv_row({std::to_string(p.type + 1), std::to_string(p.tier + 1), std::to_string(p.trials),
                        format_double(p.secp.estimate), format_double(p.secp.half_width_95),
                        format_double(p.scp.estimate), format_double(p.scp.half_width_95)});
    }
    csv += csv_row({"all", "all", std::to_string(res.p_s.trials), format_double(res.p_s.estimate),
                    format_double(res.p_s.half_width_95), format_double(res.p_cp.estimate),
                    format_double(res.p_cp.half_width_95)});
    write_text(r, "simulate.csv", csv);
    std::printf("p_s = %.6f +/- %.6f  p_cp = %.6f +/- %.6f  (%zu trials, seed %llu)\n", res.p_s.estimate,
                res.p_s.half_width_95, res.p_cp.estimate, res.p_cp.half_width_95, res.p_s.trials,
                static_cast<unsigned long long>(c.seed));
    std::vector<std::size_t> unstable;
    for (std::size_t k = 0; k < res.unstable_tiers.size(); ++k) {
        if (res.unstable_tiers[k]) unstable.push_back(k + 1);
    }
    if (trace) {
        const QueueLoad loads = compute_loads(r.scenario.network, r.scenario.bias);
        std::vector<QueueTrace> traces;
        for (std::size_t k = 0; k < r.scenario.network.num_tiers(); ++k) {
            const TierQueue q = tier_queue(r.scenario.network, loads, k);
            if (!q.stable()) continue;
            traces.push_back(simulate_queue(q, {trace_horizon, 0.0, c.seed, k}));
        }
        const fs::path p = r.out / "traces.csv";
        write_trace_csv(p.string(), traces);
        r.outputs.push_back(p.string());
    }
    write_json(r, "simulate.json",
               {{"p_s", res.p_s.estimate},
                {"p_s_ci95", res.p_s.half_width_95},
                {"p_cp", res.p_cp.estimate},
                {"p_cp_ci95", res.p_cp.half_width_95},
                {"trials", res.p_s.trials},
                {"utilizations", res.utilizations},
                {"unstable_tiers", unstable},
                {"config_hash", r.hash}});
    finish_run(r, c, {{"trials", c.trials}});
    if (!res.stable) {
        std::cerr << "warning: unstable tier(s) counted as misses:";
        for (std::size_t k : unstable) std::cerr << ' ' << k;
        std::cerr << "\n";
        return kUnstable;
    }
    return kOk;
}

void print_sweep(const SweepResult& res) {
    std::printf("%14s %10s %10s %10s %s\n", res.spec.param.c_str(), "objective", "p_s", "p_cp", "stable");
    for (const SweepPoint& p : res.points) {
        std::printf("%14.6g %10.6f %10.6f %10.6f %s\n", p.grid_value, p.objective, p.p_s, p.p_cp,
                    p.stable ? "yes" : "no");
    }
    std::printf("argmax %s = %.6g  objective = %.6f\n", res.spec.param.c_str(), res.argmax_value, res.best);
}

int cmd_sweep(const Common& c, SweepSpec spec, const std::string& scale, const std::string& objective,
              const std::string& method, const std::string& secp_method, const std::string& baseline) {
    Run r = start_run("sweep", c);
    spec.scale = grid_scale_from_string(scale);
    spec.objective = objective_from_string(objective);
    spec.method = eval_method_from_string(method);
    spec.secp_method = secp_method_from_string(secp_method);
    spec.threads = c.threads;
    spec.simulation.trials = c.trials;
    spec.simulation.seed = c.seed;
    spec.validate();
    const SweepResult res = sweep(r.scenario.network, r.scenario.bias, spec);
    print_sweep(res);
    write_sweep_csv((r.out / "sweep.csv").string(), res);
    r.outputs.push_back((r.out / "sweep.csv").string());
    json summary = sweep_summary(res, r.hash);
    if (!baseline.empty()) {
        const Scenario base = load_config(baseline);
        const double ref = overall_secp(base.network, base.bias, spec.secp_method).p_s;
        const auto iv = interval_above(res, ref);
        summary["baseline"] = {{"config", baseline}, {"config_hash", config_hash(base)}, {"p_s", ref}};
        summary["interval_above_baseline"] = iv ? json{iv->first, iv->second} : json(nullptr);
        if (iv) {
            std::printf("p_s above baseline %.6f on [%.6g, %.6g]\n", ref, iv->first, iv->second);
        } else {
            std::printf("p_s never exceeds baseline %.6f around the argmax\n", ref);
        }
    }
    write_json(r, "sweep.json", summary);
    finish_run(r, c);
    return kOk;
}

int cmd_ncc(const Common& c, NccSpec spec, std::size_t tier1, const std::string& objective,
            const std::string& secp_method, std::optional<double> capability) {
    Run r = start_run("ncc", c);
    if (tier1 < 1) throw ConfigError("--tier: tiers are 1-based");
    spec.tier = tier1 - 1;
    spec.objective = objective_from_string(objective);
    spec.secp_method = secp_method_from_string(secp_method);
    spec.threads = c.threads;
    NetworkConfig cfg = r.scenario.network;
    if (capability) cfg = with_capability(cfg, *capability);
    const SweepResult res = ncc_sweep(cfg, r.scenario.bias, spec);
    print_sweep(res);
    const double nk = network_capability(cfg);
    std::printf("capability N_K = %.17g (constant across the sweep)\n", nk);
    write_sweep_csv((r.out / "ncc.csv").string(), res);
    r.outputs.push_back((r.out / "ncc.csv").string());
    json summary = sweep_summary(res, r.hash);
    summary["capability"] = nk;
    summary["capability_constant"] = true;
    summary["tier"] = tier1;
    write_json(r, "ncc.json", summary);
    finish_run(r, c);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Edge computing success probability in multi-tier networks"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    app.fallthrough();
    Common common;
    app.add_option("--config", common.config, "Scenario JSON (defaults when omitted)")->check(CLI::ExistingFile);
    app.add_option("--bias", common.bias, "Bias override i,k,valdB (1-based, repeatable)");
    app.add_option("--seed", common.seed, "RNG seed");
    app.add_option("--trials", common.trials, "Monte Carlo trials")->check(CLI::PositiveNumber);
    app.add_option("--threads", common.threads, "Worker cap")->check(CLI::PositiveNumber);
    app.add_option("--out-dir", common.out_dir, "Output directory (default $MEC_HETNET_OUT or .)");

    std::string secp_method = "auto";
    const auto method_names = CLI::IsMember({"auto", "exact-closed-form", "laplace-inversion", "gamma-approx",
                                             "gamma-approx-unconditional"});

    CLI::App* analyze = app.add_subcommand("analyze", "Per-pair analysis and overall p_s, p_cp");
    analyze->add_option("--secp-method", secp_method, "SECP evaluation route")->check(method_names);

    double horizon = 1e6, warmup = 1e5, trace_horizon = 1e4;
    bool trace = false;
    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo estimate with 95% intervals");
    simulate->add_option("--horizon", horizon, "Queue run length in slots");
    simulate->add_option("--warmup", warmup, "Discarded initial slots");
    simulate->add_flag("--trace", trace, "Also write per-task queue traces");
    simulate->add_option("--trace-horizon", trace_horizon, "Slots simulated for the trace file");

    SweepSpec spec;
    std::string scale = "dB", objective = "secp", method = "analytical", baseline;
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "Objective over a one-parameter grid");
    sweep_cmd->add_option("--param", spec.param, "bias[i][k], theta[k], lambda_u, mu[k], d[i] or t_tg[i]");
    sweep_cmd->add_option("--from", spec.start, "Grid start");
    sweep_cmd->add_option("--to", spec.stop, "Grid stop");
    sweep_cmd->add_option("--steps", spec.steps, "Grid points");
    sweep_cmd->add_option("--scale", scale, "linear or dB")->check(CLI::IsMember({"linear", "dB", "db"}));
    sweep_cmd->add_option("--objective", objective, "secp or scp")->check(CLI::IsMember({"secp", "scp"}));
    sweep_cmd->add_option("--method", method, "analytical or simulation")
        ->check(CLI::IsMember({"analytical", "simulation"}));
    sweep_cmd->add_option("--secp-method", secp_method, "SECP route for analytical points")->check(method_names);
    sweep_cmd->add_option("--baseline", baseline, "Config whose p_s is the comparison level")
        ->check(CLI::ExistingFile);

    NccSpec ncc;
    std::size_t tier1 = 2;
    std::optional<double> capability;
    CLI::App* ncc_cmd = app.add_subcommand("ncc", "Density/speed trade at fixed computation capability");
    ncc_cmd->add_option("--tier", tier1, "Tier whose ratio theta is swept (1-based)");
    ncc_cmd->add_option("--from", ncc.theta_start, "First theta");
    ncc_cmd->add_option("--to", ncc.theta_stop, "Last theta");
    ncc_cmd->add_option("--steps", ncc.steps, "Grid points");
    ncc_cmd->add_option("--capability", capability, "Rescale service rates to this capability first");
    ncc_cmd->add_option("--objective", objective, "secp or scp")->check(CLI::IsMember({"secp", "scp"}));
    ncc_cmd->add_option("--secp-method", secp_method, "SECP route")->check(method_names);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*analyze) return cmd_analyze(common, secp_method);
        if (*simulate) return cmd_simulate(common, horizon, warmup, trace, trace_horizon);
        if (*sweep_cmd) return cmd_sweep(common, spec, scale, objective, method, secp_method, baseline);
        if (*ncc_cmd) {
            if (ncc.steps < 2 || !(ncc.theta_start < ncc.theta_stop)) {
                throw ConfigError("ncc: need steps >= 2 and from < to");
            }
            return cmd_ncc(common, ncc, tier1, objective, secp_method, capability);
        }
    } catch (const InstabilityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUnstable;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}
