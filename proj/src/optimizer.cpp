#include "mechet/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <regex>
#include <thread>

#include "mechet/errors.hpp"
#include "mechet/report.hpp"

namespace mechet {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// fn(n) for n in [0, count) on up to `threads` workers; results land by index.
template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn fn) {
    const unsigned t = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
    if (t <= 1) {
        for (std::size_t n = 0; n < count; ++n) fn(n);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex lock;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < t; ++w) {
        pool.emplace_back([&] {
            try {
                for (std::size_t n = next++; n < count; n = next++) fn(n);
            } catch (...) {
                std::lock_guard<std::mutex> g(lock);
                if (!failure) failure = std::current_exception();
                next = count;
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

std::vector<double> absolute_densities(const NetworkConfig& cfg) {
    std::vector<double> d(cfg.num_tiers());
    for (std::size_t j = 0; j < d.size(); ++j) d[j] = derived_tier_density(cfg, j);
    return d;
}

void set_absolute_densities(NetworkConfig& cfg, const std::vector<double>& d) {
    double total = 0.0;
    for (double v : d) total += v;
    cfg.server_density = total;
    for (std::size_t j = 0; j < d.size(); ++j) cfg.tiers[j].density_fraction = d[j] / total;
}

struct Evaluation {
    bool stable = true;
    double p_s = 0.0, p_cp = 0.0, p_s_hw = 0.0, p_cp_hw = 0.0;
};

Evaluation evaluate(const NetworkConfig& cfg, const BiasMatrix& bias, EvalMethod method, SecpMethod secp_method,
                    const SimulationOptions& sim) {
    Evaluation e;
    if (!compute_loads(cfg, bias).stable()) {
        e.stable = false;
        return e;
    }
    if (method == EvalMethod::Analytical) {
        try {
            const SecpResult r = overall_secp(cfg, bias, secp_method);
            e.p_s = r.p_s;
            e.p_cp = r.p_cp;
        } catch (const InstabilityError&) {
            e.stable = false;
        }
        return e;
    }
    const SimSecpResult r = simulate_secp(cfg, bias, sim);
    e.stable = r.stable;
    e.p_s = r.p_s.estimate;
    e.p_cp = r.p_cp.estimate;
    e.p_s_hw = r.p_s.half_width_95;
    e.p_cp_hw = r.p_cp.half_width_95;
    return e;
}

double objective_of(const Evaluation& e, Objective o) {
    if (!e.stable) return kNegInf;
    return o == Objective::Secp ? e.p_s : e.p_cp;
}

bool finish(SweepResult& r) {
    std::vector<double> obj;
    std::vector<bool> stable;
    for (const auto& p : r.points) {
        obj.push_back(p.objective);
        stable.push_back(p.stable);
    }
    const auto best = stable_argmax(obj, stable);
    if (!best) return false;
    r.argmax = *best;
    r.argmax_value = r.points[*best].grid_value;
    r.best = r.points[*best].objective;
    return true;
}

std::size_t parse_index(const std::string& s, const std::string& text) {
    const long v = std::stol(s);
    if (v < 1) throw ConfigError("parameter '" + text + "': indices are 1-based");
    return static_cast<std::size_t>(v - 1);
}

}  // namespace

const char* to_string(Objective o) { return o == Objective::Secp ? "secp" : "scp"; }
const char* to_string(EvalMethod m) { return m == EvalMethod::Analytical ? "analytical" : "simulation"; }
const char* to_string(GridScale s) { return s == GridScale::Linear ? "linear" : "dB"; }

Objective objective_from_string(const std::string& s) {
    if (s == "secp" || s == "p_s") return Objective::Secp;
    if (s == "scp" || s == "p_cp") return Objective::Scp;
    throw ConfigError("objective: expected secp or scp, got '" + s + "'");
}

EvalMethod eval_method_from_string(const std::string& s) {
    if (s == "analytical") return EvalMethod::Analytical;
    if (s == "simulation") return EvalMethod::Simulation;
    throw ConfigError("method: expected analytical or simulation, got '" + s + "'");
}

GridScale grid_scale_from_string(const std::string& s) {
    if (s == "linear") return GridScale::Linear;
    if (s == "dB" || s == "db") return GridScale::Db;
    throw ConfigError("scale: expected linear or dB, got '" + s + "'");
}

ParamPath ParamPath::parse(const std::string& text) {
    static const std::regex two(R"(^\s*(bias|B)\[(\d+)\]\[(\d+)\]\s*$)");
    static const std::regex one(R"(^\s*(theta|mu|service_rate|d|task_packets|t_tg|target_latency)\[(\d+)\]\s*$)");
    static const std::regex none(R"(^\s*(lambda_u|user_density)\s*$)");
    std::smatch m;
    ParamPath p;
    if (std::regex_match(text, m, two)) {
        p.kind = Kind::Bias;
        p.i = parse_index(m[2], text);
        p.k = parse_index(m[3], text);
        return p;
    }
    if (std::regex_match(text, m, one)) {
        const std::string name = m[1];
        const std::size_t idx = parse_index(m[2], text);
        if (name == "theta") {
            p.kind = Kind::Theta;
            p.k = idx;
        } else if (name == "mu" || name == "service_rate") {
            p.kind = Kind::ServiceRate;
            p.k = idx;
        } else if (name == "d" || name == "task_packets") {
            p.kind = Kind::TaskPackets;
            p.i = idx;
        } else {
            p.kind = Kind::TargetLatency;
            p.i = idx;
        }
        return p;
    }
    if (std::regex_match(text, m, none)) {
        p.kind = Kind::UserDensity;
        return p;
    }
    throw ConfigError("param: unknown parameter '" + text + "'");
}

std::string ParamPath::str() const {
    const std::string i1 = std::to_string(i + 1), k1 = std::to_string(k + 1);
    switch (kind) {
        case Kind::Bias: return "bias[" + i1 + "][" + k1 + "]";
        case Kind::Theta: return "theta[" + k1 + "]";
        case Kind::UserDensity: return "lambda_u";
        case Kind::ServiceRate: return "mu[" + k1 + "]";
        case Kind::TaskPackets: return "d[" + i1 + "]";
        case Kind::TargetLatency: return "t_tg[" + i1 + "]";
    }
    return "";
}

void apply_param(NetworkConfig& cfg, BiasMatrix& bias, const ParamPath& p, double value) {
    auto need_tier = [&] {
        if (p.k >= cfg.num_tiers()) throw ConfigError("param " + p.str() + ": tier index out of range");
    };
    auto need_type = [&] {
        if (p.i >= cfg.num_types()) throw ConfigError("param " + p.str() + ": user type index out of range");
    };
    if (!std::isfinite(value)) throw ConfigError("param " + p.str() + ": value must be finite");
    switch (p.kind) {
        case ParamPath::Kind::Bias:
            need_type();
            need_tier();
            bias.set(p.i, p.k, value);
            break;
        case ParamPath::Kind::Theta: {
            need_tier();
            if (!(value > 0.0)) throw ConfigError("param " + p.str() + ": theta must be > 0");
            std::vector<double> d = absolute_densities(cfg);
            d[p.k] /= value;
            set_absolute_densities(cfg, d);
            cfg.tiers[p.k].service_rate *= value;
            break;
        }
        case ParamPath::Kind::UserDensity:
            cfg.user_density = value;
            break;
        case ParamPath::Kind::ServiceRate:
            need_tier();
            cfg.tiers[p.k].service_rate = value;
            break;
        case ParamPath::Kind::TaskPackets: {
            need_type();
            const double r = std::round(value);
            if (std::abs(r - value) > 1e-9 || r < 1.0) {
                throw ConfigError("param " + p.str() + ": task size must be a positive integer");
            }
            cfg.user_types[p.i].task_packets = static_cast<int>(r);
            break;
        }
        case ParamPath::Kind::TargetLatency:
            need_type();
            cfg.user_types[p.i].target_latency_s = value;
            break;
    }
}

void SweepSpec::validate() const {
    ParamPath::parse(param);
    if (steps < 2) throw ConfigError("steps: must be >= 2");
    if (!(start < stop)) throw ConfigError("from/to: need from < to");
    if (!std::isfinite(start) || !std::isfinite(stop)) throw ConfigError("from/to: must be finite");
}

std::vector<double> SweepSpec::grid() const {
    std::vector<double> g(steps);
    for (std::size_t n = 0; n < steps; ++n) {
        g[n] = n + 1 == steps ? stop : start + (stop - start) * static_cast<double>(n) / static_cast<double>(steps - 1);
    }
    return g;
}

double SweepSpec::applied(double grid_value) const {
    return scale == GridScale::Db ? db_to_linear(grid_value) : grid_value;
}

nlohmann::json to_json(const SweepSpec& s) {
    return {{"param", s.param},
            {"from", s.start},
            {"to", s.stop},
            {"steps", s.steps},
            {"scale", to_string(s.scale)},
            {"objective", to_string(s.objective)},
            {"method", to_string(s.method)},
            {"secp_method", to_string(s.secp_method)},
            {"trials", s.simulation.trials},
            {"seed", s.simulation.seed}};
}

std::vector<double> SweepResult::grid() const { return values(&SweepPoint::grid_value); }

std::vector<double> SweepResult::values(double SweepPoint::*field) const {
    std::vector<double> v;
    v.reserve(points.size());
    for (const auto& p : points) v.push_back(p.*field);
    return v;
}

std::optional<std::size_t> stable_argmax(const std::vector<double>& values, const std::vector<bool>& stable) {
    std::optional<std::size_t> best;
    for (std::size_t n = 0; n < values.size(); ++n) {
        if (!stable[n] || std::isnan(values[n])) continue;
        if (!best || values[n] > values[*best]) best = n;
    }
    return best;
}

SweepResult sweep(const NetworkConfig& cfg, const BiasMatrix& bias, const SweepSpec& spec) {
    spec.validate();
    validate(cfg, bias);
    const ParamPath path = ParamPath::parse(spec.param);
    const std::vector<double> grid = spec.grid();
    SweepResult r;
    r.spec = spec;
    r.points.resize(grid.size());
    // Simulation points parallelize internally; analytical points across the grid.
    const unsigned workers = spec.method == EvalMethod::Analytical ? spec.threads : 1;
    SimulationOptions sim = spec.simulation;
    sim.threads = spec.threads;
    parallel_for(grid.size(), workers, [&](std::size_t n) {
        NetworkConfig c = cfg;
        BiasMatrix b = bias;
        apply_param(c, b, path, spec.applied(grid[n]));
        validate(c, b);
        const Evaluation e = evaluate(c, b, spec.method, spec.secp_method, sim);
        SweepPoint& p = r.points[n];
        p.grid_value = grid[n];
        p.stable = e.stable;
        p.p_s = e.p_s;
        p.p_cp = e.p_cp;
        p.p_s_half_width = e.p_s_hw;
        p.p_cp_half_width = e.p_cp_hw;
        p.objective = objective_of(e, spec.objective);
        p.capability = network_capability(c);
    });
    if (!finish(r)) {
        // Every point is unstable; report the first one.
        NetworkConfig c = cfg;
        BiasMatrix b = bias;
        apply_param(c, b, path, spec.applied(grid.front()));
        const QueueLoad loads = compute_loads(c, b);
        const std::size_t k = loads.first_unstable();
        throw InstabilityError(k == QueueLoad::npos ? 0 : k, k == QueueLoad::npos ? 1.0 : loads.utilizations[k]);
    }
    return r;
}

std::optional<std::pair<double, double>> interval_above(const SweepResult& r, double threshold,
                                                        double SweepPoint::*field) {
    if (r.points.empty()) return std::nullopt;
    auto above = [&](std::size_t n) { return r.points[n].stable && r.points[n].*field > threshold; };
    const std::size_t c = r.argmax;
    if (!above(c)) return std::nullopt;
    std::size_t lo = c, hi = c;
    while (lo > 0 && above(lo - 1)) --lo;
    while (hi + 1 < r.points.size() && above(hi + 1)) ++hi;
    return std::make_pair(r.points[lo].grid_value, r.points[hi].grid_value);
}

BiasOptimum optimize_bias(const NetworkConfig& cfg, const BiasMatrix& bias, const std::vector<FreeBias>& free_in,
                          const BiasSearch& search) {
    validate(cfg, bias);
    if (free_in.empty()) throw ConfigError("optimize_bias: at least one free entry is required");
    if (search.passes < 1 || !(search.step_db > 0.0)) throw ConfigError("optimize_bias: bad passes or step");
    const std::size_t I = cfg.num_types(), K = cfg.num_tiers();
    for (const auto& f : free_in) {
        if (f.i >= I || f.k >= K) throw ConfigError("optimize_bias: free entry out of range");
        if (!(f.lo_db <= f.hi_db)) throw ConfigError("optimize_bias: empty box for a free entry");
    }

    // Normalize each row on its reference entry; a fully free row gives up
    // its first free entry as the reference.
    BiasMatrix b = bias;
    std::vector<FreeBias> free;
    for (std::size_t i = 0; i < I; ++i) {
        std::vector<bool> is_free(K, false);
        for (const auto& f : free_in) {
            if (f.i == i) is_free[f.k] = true;
        }
        std::size_t ref = K;
        for (std::size_t k = 0; k < K && ref == K; ++k) {
            if (!is_free[k]) ref = k;
        }
        if (ref == K) {
            for (const auto& f : free_in) {
                if (f.i == i) {
                    ref = f.k;
                    break;
                }
            }
        }
        if (ref == K) continue;  // type has no free entries
        const double scale = b.at(i, ref);
        for (std::size_t k = 0; k < K; ++k) b.set(i, k, b.at(i, k) / scale);
        b.set(i, ref, 1.0);
        for (const auto& f : free_in) {
            if (f.i == i && f.k != ref) free.push_back(f);
        }
    }

    BiasOptimum out;
    auto score = [&](const BiasMatrix& m) {
        ++out.evaluations;
        return evaluate(cfg, m, search.method, search.secp_method, search.simulation);
    };
    if (free.empty()) {
        const Evaluation e = score(b);
        if (!e.stable) throw InstabilityError(compute_loads(cfg, b).first_unstable(), 1.0);
        out.bias = b;
        out.value = objective_of(e, search.objective);
        out.p_s = e.p_s;
        out.p_cp = e.p_cp;
        return out;
    }

    std::vector<double> x(free.size());
    for (std::size_t n = 0; n < free.size(); ++n) {
        x[n] = std::clamp(b.db(free[n].i, free[n].k), free[n].lo_db, free[n].hi_db);
        b.set_db(free[n].i, free[n].k, x[n]);
    }
    Evaluation current_eval = score(b);
    double current = objective_of(current_eval, search.objective);

    auto candidates = [&](std::size_t n, int pass, double step) {
        std::vector<double> c;
        const FreeBias& f = free[n];
        if (pass == 0) {
            const auto count = static_cast<std::size_t>(std::floor((f.hi_db - f.lo_db) / step + 1e-9));
            for (std::size_t m = 0; m <= count; ++m) c.push_back(f.lo_db + static_cast<double>(m) * step);
            if (f.hi_db - c.back() > 1e-9) c.push_back(f.hi_db);
        } else {
            for (int m = -2; m <= 2; ++m) {
                const double v = x[n] + m * step;
                if (v >= f.lo_db - 1e-12 && v <= f.hi_db + 1e-12) c.push_back(std::clamp(v, f.lo_db, f.hi_db));
            }
        }
        return c;
    };

    const double unset = std::numeric_limits<double>::quiet_NaN();
    for (int pass = 0; pass < search.passes; ++pass) {
        const double step = search.step_db / std::pow(2.0, pass);
        for (int cycle = 0; cycle < 20; ++cycle) {
            bool moved = false;
            for (std::size_t n = 0; n < free.size(); ++n) {
                const std::vector<double> c = candidates(n, pass, step);
                std::vector<Evaluation> evals(c.size());
                std::vector<double> obj(c.size(), unset);
                parallel_for(c.size(), search.threads, [&](std::size_t m) {
                    BiasMatrix trial = b;
                    trial.set_db(free[n].i, free[n].k, c[m]);
                    evals[m] = evaluate(cfg, trial, search.method, search.secp_method, search.simulation);
                    obj[m] = objective_of(evals[m], search.objective);
                });
                out.evaluations += c.size();
                std::size_t best = 0;
                for (std::size_t m = 1; m < c.size(); ++m) {
                    if (obj[m] > obj[best]) best = m;
                }
                // The first cycle of the grid pass adopts the grid argmax
                // outright; afterwards only strict gains move.
                const bool first = pass == 0 && cycle == 0;
                if (first || obj[best] > current) {
                    moved = moved || obj[best] > current;
                    x[n] = c[best];
                    b.set_db(free[n].i, free[n].k, x[n]);
                    current = obj[best];
                    current_eval = evals[best];
                }
            }
            if (!moved && cycle > 0) break;
        }
    }
    if (current == kNegInf) {
        const QueueLoad loads = compute_loads(cfg, b);
        const std::size_t k = loads.first_unstable();
        throw InstabilityError(k == QueueLoad::npos ? 0 : k, k == QueueLoad::npos ? 1.0 : loads.utilizations[k]);
    }
    out.bias = b;
    out.value = current;
    out.p_s = current_eval.p_s;
    out.p_cp = current_eval.p_cp;
    return out;
}

double network_capability(const NetworkConfig& cfg) {
    double n = 0.0;
    for (std::size_t j = 0; j < cfg.num_tiers(); ++j) n += derived_tier_density(cfg, j) * cfg.tiers[j].service_rate;
    return n;
}

NetworkConfig with_capability(const NetworkConfig& cfg, double target) {
    if (!(target > 0.0)) throw ConfigError("capability must be > 0");
    NetworkConfig c = cfg;
    const double scale = target / network_capability(cfg);
    for (auto& t : c.tiers) t.service_rate *= scale;
    return c;
}

SweepResult ncc_sweep(const NetworkConfig& cfg, const BiasMatrix& bias, const NccSpec& spec) {
    if (spec.tier >= cfg.num_tiers()) throw ConfigError("ncc: tier index out of range");
    if (!(spec.theta_start > 0.0)) throw ConfigError("ncc: theta grid must be > 0");
    SweepSpec s;
    s.param = "theta[" + std::to_string(spec.tier + 1) + "]";
    s.start = spec.theta_start;
    s.stop = spec.theta_stop;
    s.steps = spec.steps;
    s.scale = GridScale::Linear;
    s.objective = spec.objective;
    s.method = EvalMethod::Analytical;
    s.secp_method = spec.secp_method;
    s.threads = spec.threads;
    SweepResult r = sweep(cfg, bias, s);
    const double base = network_capability(cfg);
    for (const auto& p : r.points) {
        if (std::abs(p.capability - base) > 1e-12 * base) {
            throw NumericalError("ncc: capability drifted to " + format_double(p.capability) + " from " +
                                 format_double(base));
        }
    }
    return r;
}

void write_sweep_csv(const std::string& path, const SweepResult& r) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ResourceError("cannot open " + path);
    const bool sim = r.spec.method == EvalMethod::Simulation;
    const bool ncc = ParamPath::parse(r.spec.param).kind == ParamPath::Kind::Theta;
    std::vector<std::string> header{r.spec.param, "objective", "p_s", "p_cp", "stable"};
    if (sim) {
        header.push_back("p_s_ci95");
        header.push_back("p_cp_ci95");
    }
    if (ncc) header.push_back("capability");
    out << csv_row(header);
    for (const auto& p : r.points) {
        std::vector<std::string> row{format_double(p.grid_value), format_double(p.objective), format_double(p.p_s),
                                     format_double(p.p_cp), p.stable ? "1" : "0"};
        if (sim) {
            row.push_back(format_double(p.p_s_half_width));
            row.push_back(format_double(p.p_cp_half_width));
        }
        if (ncc) row.push_back(format_double(p.capability));
        out << csv_row(row);
    }
    if (!out) throw ResourceError("failed writing " + path);
}

nlohmann::json sweep_summary(const SweepResult& r, const std::string& config_hash) {
    const SweepPoint& best = r.points.at(r.argmax);
    std::size_t unstable = 0;
    for (const auto& p : r.points) unstable += p.stable ? 0 : 1;
    nlohmann::json j{{"spec", to_json(r.spec)},
                     {"config_hash", config_hash},
                     {"argmax_index", r.argmax},
                     {"argmax_value", r.argmax_value},
                     {"objective_at_argmax", r.best},
                     {"p_s_at_argmax", best.p_s},
                     {"p_cp_at_argmax", best.p_cp},
                     {"unstable_points", unstable}};
    return j;
}

}  // namespace mechet
