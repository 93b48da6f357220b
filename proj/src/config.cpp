#include "mechet/config.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "mechet/errors.hpp"

namespace mechet {

using nlohmann::json;

double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }
double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

BiasMatrix::BiasMatrix(std::size_t types, std::size_t tiers, double linear)
    : types_(types), tiers_(tiers), values_(types * tiers, linear) {
    if (!(linear > 0.0)) throw ConfigError("bias must be > 0");
}

void BiasMatrix::set(std::size_t i, std::size_t k, double linear) {
    if (i >= types_ || k >= tiers_) {
        throw ConfigError("bias index (" + std::to_string(i + 1) + "," + std::to_string(k + 1) +
                          ") out of range");
    }
    if (!(linear > 0.0) || !std::isfinite(linear)) {
        throw ConfigError("bias[" + std::to_string(i + 1) + "][" + std::to_string(k + 1) +
                          "] must be finite and > 0");
    }
    values_[i * tiers_ + k] = linear;
}

namespace {

constexpr double kSumTolerance = 1e-9;

[[noreturn]] void fail(const std::string& field, const std::string& constraint) {
    throw ConfigError(field + ": " + constraint);
}

std::string tier_field(std::size_t k, const char* name) {
    return "tiers[" + std::to_string(k) + "]." + name;
}

std::string type_field(std::size_t i, const char* name) {
    return "user_types[" + std::to_string(i) + "]." + name;
}

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) fail(where, "must be an object");
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.count(key)) fail(where.empty() ? key : where + "." + key, "unknown field");
    }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback, const std::string& field) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        fail(field, std::string("wrong type (") + e.what() + ")");
    }
}

std::vector<double> per_tier(const json& obj, const char* key, double fallback, std::size_t tiers,
                             const std::string& field) {
    if (!obj.contains(key)) return std::vector<double>(tiers, fallback);
    const json& v = obj.at(key);
    if (v.is_number()) return std::vector<double>(tiers, v.get<double>());
    if (!v.is_array() || v.size() != tiers) {
        fail(field, "must be a number or an array with one entry per tier");
    }
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) fail(field, "entries must be numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

TierParams default_tier(std::size_t k) {
    // Macro tier first, then small cells.
    if (k == 0) return {0.25, dbm_to_mw(43.0), 9.0, 10e6};
    return {0.75, dbm_to_mw(33.0), 3.0, 3e6};
}

}  // namespace

Scenario default_scenario() {
    Scenario s;
    NetworkConfig& c = s.network;
    c.tiers = {default_tier(0), default_tier(1)};
    for (int d : {1, 2}) {
        UserTypeParams u;
        u.portion = 0.5;
        u.task_packets = d;
        u.request_packets = d;
        u.result_packets = d;
        u.tx_power_mw = dbm_to_mw(23.0);
        u.target_latency_s = 2e-3;
        u.coverage_up.assign(2, 0.95);
        u.coverage_down.assign(2, 0.95);
        c.user_types.push_back(u);
    }
    s.bias = BiasMatrix(2, 2, 1.0);
    return s;
}

Scenario scenario_from_json(const json& j) {
    check_keys(j,
               {"server_density", "user_density", "tiers", "user_types", "pathloss", "reuse",
                "bandwidth_up_hz", "bandwidth_down_hz", "packet_bits", "cycles_per_bit", "slot_s",
                "noise_dbm", "downlink_uses_request_size", "thinned_arrivals", "bias_db",
                "bias_linear", "coverage"},
               "");
    const Scenario defaults = default_scenario();
    Scenario s;
    NetworkConfig& c = s.network;
    c = defaults.network;

    c.user_density = get_or(j, "user_density", c.user_density, "user_density");
    c.pathloss = get_or(j, "pathloss", c.pathloss, "pathloss");
    c.reuse = get_or(j, "reuse", c.reuse, "reuse");
    c.bandwidth_up_hz = get_or(j, "bandwidth_up_hz", c.bandwidth_up_hz, "bandwidth_up_hz");
    c.bandwidth_down_hz = get_or(j, "bandwidth_down_hz", c.bandwidth_down_hz, "bandwidth_down_hz");
    c.packet_bits = get_or(j, "packet_bits", c.packet_bits, "packet_bits");
    c.cycles_per_bit = get_or(j, "cycles_per_bit", c.cycles_per_bit, "cycles_per_bit");
    c.slot_s = get_or(j, "slot_s", c.slot_s, "slot_s");
    c.noise_dbm = get_or(j, "noise_dbm", c.noise_dbm, "noise_dbm");
    c.downlink_uses_request_size =
        get_or(j, "downlink_uses_request_size", c.downlink_uses_request_size, "downlink_uses_request_size");
    c.thinned_arrivals = get_or(j, "thinned_arrivals", c.thinned_arrivals, "thinned_arrivals");
    const double coverage_default = get_or(j, "coverage", 0.95, "coverage");

    // Tiers: either all give density_fraction (with a top-level
    // server_density) or all give an absolute density.
    bool absolute_densities = false;
    if (j.contains("tiers")) {
        const json& arr = j.at("tiers");
        if (!arr.is_array() || arr.empty()) fail("tiers", "must be a non-empty array");
        c.tiers.clear();
        std::vector<double> absolute;
        for (std::size_t k = 0; k < arr.size(); ++k) {
            const json& t = arr[k];
            check_keys(t, {"density_fraction", "density", "tx_power_dbm", "tx_power_mw", "service_rate", "cpu_freq_hz"},
                       "tiers[" + std::to_string(k) + "]");
            TierParams p = default_tier(std::min<std::size_t>(k, 1));
            if (t.contains("tx_power_dbm") && t.contains("tx_power_mw")) {
                fail(tier_field(k, "tx_power"), "give tx_power_dbm or tx_power_mw, not both");
            }
            if (t.contains("tx_power_dbm")) {
                p.tx_power_mw = dbm_to_mw(get_or(t, "tx_power_dbm", 0.0, tier_field(k, "tx_power_dbm")));
            }
            p.tx_power_mw = get_or(t, "tx_power_mw", p.tx_power_mw, tier_field(k, "tx_power_mw"));
            p.service_rate = get_or(t, "service_rate", p.service_rate, tier_field(k, "service_rate"));
            p.cpu_freq_hz = get_or(t, "cpu_freq_hz", p.cpu_freq_hz, tier_field(k, "cpu_freq_hz"));
            if (t.contains("density") == t.contains("density_fraction")) {
                fail(tier_field(k, "density"), "give exactly one of density or density_fraction");
            }
            if (t.contains("density")) {
                absolute.push_back(get_or(t, "density", 0.0, tier_field(k, "density")));
            } else {
                p.density_fraction = get_or(t, "density_fraction", 0.0, tier_field(k, "density_fraction"));
            }
            c.tiers.push_back(p);
        }
        if (!absolute.empty()) {
            if (absolute.size() != c.tiers.size()) {
                fail("tiers", "either every tier gives density or every tier gives density_fraction");
            }
            if (j.contains("server_density")) {
                fail("server_density", "must be omitted when tiers give absolute densities");
            }
            double total = 0.0;
            for (std::size_t k = 0; k < absolute.size(); ++k) {
                if (!(absolute[k] > 0.0)) fail(tier_field(k, "density"), "must be > 0");
                total += absolute[k];
            }
            c.server_density = total;
            absolute_densities = true;
            for (std::size_t k = 0; k < absolute.size(); ++k) c.tiers[k].density_fraction = absolute[k] / total;
        }
    }
    if (!absolute_densities) {
        c.server_density = get_or(j, "server_density", c.server_density, "server_density");
    }
    const std::size_t K = c.tiers.size();

    if (j.contains("user_types")) {
        const json& arr = j.at("user_types");
        if (!arr.is_array() || arr.empty()) fail("user_types", "must be a non-empty array");
        c.user_types.clear();
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const json& t = arr[i];
            check_keys(t,
                       {"portion", "task_packets", "request_packets", "result_packets", "tx_power_dbm",
                        "tx_power_mw", "target_latency_s", "coverage_up", "coverage_down"},
                       "user_types[" + std::to_string(i) + "]");
            UserTypeParams u;
            u.portion = get_or(t, "portion", 1.0 / static_cast<double>(arr.size()), type_field(i, "portion"));
            u.task_packets = get_or(t, "task_packets", 1, type_field(i, "task_packets"));
            u.request_packets = get_or(t, "request_packets", u.task_packets, type_field(i, "request_packets"));
            u.result_packets = get_or(t, "result_packets", u.task_packets, type_field(i, "result_packets"));
            if (t.contains("tx_power_dbm") && t.contains("tx_power_mw")) {
                fail(type_field(i, "tx_power"), "give tx_power_dbm or tx_power_mw, not both");
            }
            if (t.contains("tx_power_dbm")) {
                u.tx_power_mw = dbm_to_mw(get_or(t, "tx_power_dbm", 0.0, type_field(i, "tx_power_dbm")));
            }
            u.tx_power_mw = get_or(t, "tx_power_mw", u.tx_power_mw, type_field(i, "tx_power_mw"));
            u.target_latency_s = get_or(t, "target_latency_s", u.target_latency_s, type_field(i, "target_latency_s"));
            u.coverage_up = per_tier(t, "coverage_up", coverage_default, K, type_field(i, "coverage_up"));
            u.coverage_down = per_tier(t, "coverage_down", coverage_default, K, type_field(i, "coverage_down"));
            c.user_types.push_back(u);
        }
    } else {
        for (auto& u : c.user_types) {
            u.coverage_up.assign(K, coverage_default);
            u.coverage_down.assign(K, coverage_default);
        }
    }
    const std::size_t I = c.user_types.size();

    s.bias = BiasMatrix(I, K, 1.0);
    if (j.contains("bias_db") && j.contains("bias_linear")) fail("bias", "give bias_db or bias_linear, not both");
    for (const char* key : {"bias_db", "bias_linear"}) {
        if (!j.contains(key)) continue;
        const json& m = j.at(key);
        if (!m.is_array() || m.size() != I) fail(key, "must have one row per user type");
        for (std::size_t i = 0; i < I; ++i) {
            if (!m[i].is_array() || m[i].size() != K) {
                fail(std::string(key) + "[" + std::to_string(i) + "]", "must have one entry per tier");
            }
            for (std::size_t k = 0; k < K; ++k) {
                if (!m[i][k].is_number()) {
                    fail(std::string(key) + "[" + std::to_string(i) + "][" + std::to_string(k) + "]", "must be a number");
                }
                const double v = m[i][k].get<double>();
                if (std::string(key) == "bias_db") {
                    s.bias.set_db(i, k, v);
                } else {
                    s.bias.set(i, k, v);
                }
            }
        }
    }

    validate(c, s.bias);
    return s;
}

json scenario_to_json(const Scenario& s) {
    const NetworkConfig& c = s.network;
    json j;
    j["server_density"] = c.server_density;
    j["user_density"] = c.user_density;
    j["pathloss"] = c.pathloss;
    j["reuse"] = c.reuse;
    j["bandwidth_up_hz"] = c.bandwidth_up_hz;
    j["bandwidth_down_hz"] = c.bandwidth_down_hz;
    j["packet_bits"] = c.packet_bits;
    j["cycles_per_bit"] = c.cycles_per_bit;
    j["slot_s"] = c.slot_s;
    j["noise_dbm"] = c.noise_dbm;
    j["downlink_uses_request_size"] = c.downlink_uses_request_size;
    j["thinned_arrivals"] = c.thinned_arrivals;
    j["tiers"] = json::array();
    for (const auto& t : c.tiers) {
        j["tiers"].push_back({{"density_fraction", t.density_fraction},
                              {"tx_power_mw", t.tx_power_mw},
                              {"service_rate", t.service_rate},
                              {"cpu_freq_hz", t.cpu_freq_hz}});
    }
    j["user_types"] = json::array();
    for (const auto& u : c.user_types) {
        j["user_types"].push_back({{"portion", u.portion},
                                   {"task_packets", u.task_packets},
                                   {"request_packets", u.request_packets},
                                   {"result_packets", u.result_packets},
                                   {"tx_power_mw", u.tx_power_mw},
                                   {"target_latency_s", u.target_latency_s},
                                   {"coverage_up", u.coverage_up},
                                   {"coverage_down", u.coverage_down}});
    }
    json bias = json::array();
    for (std::size_t i = 0; i < s.bias.types(); ++i) {
        json row = json::array();
        for (std::size_t k = 0; k < s.bias.tiers(); ++k) row.push_back(s.bias.at(i, k));
        bias.push_back(row);
    }
    j["bias_linear"] = bias;
    return j;
}

Scenario load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    json j;
    try {
        j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ConfigError("cannot parse '" + path + "': " + e.what());
    }
    return scenario_from_json(j);
}

void save_config(const Scenario& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write config file '" + path + "'");
    out << scenario_to_json(s).dump(2) << "\n";
}

void validate(const NetworkConfig& c) {
    if (!(c.server_density > 0.0)) fail("server_density", "must be > 0");
    if (!(c.user_density > 0.0)) fail("user_density", "must be > 0");
    if (!(c.pathloss > 2.0)) fail("pathloss", "must be > 2");
    if (!(c.reuse > 0.0 && c.reuse <= 1.0)) fail("reuse", "must lie in (0, 1]");
    if (!(c.bandwidth_up_hz > 0.0)) fail("bandwidth_up_hz", "must be > 0");
    if (!(c.bandwidth_down_hz > 0.0)) fail("bandwidth_down_hz", "must be > 0");
    if (!(c.packet_bits > 0.0)) fail("packet_bits", "must be > 0");
    if (!(c.cycles_per_bit > 0.0)) fail("cycles_per_bit", "must be > 0");
    if (!(c.slot_s > 0.0)) fail("slot_s", "must be > 0");
    if (c.tiers.empty()) fail("tiers", "at least one tier required");
    if (c.user_types.empty()) fail("user_types", "at least one user type required");

    double sum_m = 0.0;
    for (std::size_t k = 0; k < c.tiers.size(); ++k) {
        const TierParams& t = c.tiers[k];
        if (!(t.density_fraction > 0.0 && t.density_fraction <= 1.0)) {
            fail(tier_field(k, "density_fraction"), "must lie in (0, 1]");
        }
        if (!(t.tx_power_mw > 0.0)) fail(tier_field(k, "tx_power"), "must be > 0 mW");
        if (!(t.service_rate > 0.0)) fail(tier_field(k, "service_rate"), "must be > 0");
        if (!(t.cpu_freq_hz >= 0.0)) fail(tier_field(k, "cpu_freq_hz"), "must be >= 0");
        sum_m += t.density_fraction;
    }
    if (std::abs(sum_m - 1.0) > kSumTolerance) {
        fail("tiers[].density_fraction", "must sum to 1 (got " + std::to_string(sum_m) + ")");
    }

    double sum_u = 0.0;
    for (std::size_t i = 0; i < c.user_types.size(); ++i) {
        const UserTypeParams& u = c.user_types[i];
        if (!(u.portion > 0.0 && u.portion <= 1.0)) fail(type_field(i, "portion"), "must lie in (0, 1]");
        if (u.task_packets < 1) fail(type_field(i, "task_packets"), "must be >= 1");
        if (u.request_packets < 1) fail(type_field(i, "request_packets"), "must be >= 1");
        if (u.result_packets < 1) fail(type_field(i, "result_packets"), "must be >= 1");
        if (!(u.tx_power_mw > 0.0)) fail(type_field(i, "tx_power"), "must be > 0 mW");
        if (!(u.target_latency_s > 0.0)) fail(type_field(i, "target_latency_s"), "must be > 0");
        for (const auto* cov : {&u.coverage_up, &u.coverage_down}) {
            const char* name = cov == &u.coverage_up ? "coverage_up" : "coverage_down";
            if (cov->size() != c.tiers.size()) fail(type_field(i, name), "needs one entry per tier");
            for (double b : *cov) {
                if (!(b > 0.0 && b < 1.0)) fail(type_field(i, name), "entries must lie in (0, 1)");
            }
        }
        sum_u += u.portion;
    }
    if (std::abs(sum_u - 1.0) > kSumTolerance) {
        fail("user_types[].portion", "must sum to 1 (got " + std::to_string(sum_u) + ")");
    }
}

void validate(const NetworkConfig& c, const BiasMatrix& bias) {
    validate(c);
    if (bias.types() != c.user_types.size() || bias.tiers() != c.tiers.size()) {
        fail("bias", "dimensions must be user_types x tiers");
    }
}

double derived_tier_density(const NetworkConfig& cfg, std::size_t k) {
    return cfg.tiers.at(k).density_fraction * cfg.server_density;
}

double derived_user_density(const NetworkConfig& cfg, std::size_t i) {
    return cfg.user_types.at(i).portion * cfg.user_density;
}

double service_rate_from_cpu(const NetworkConfig& cfg, double cpu_freq_hz) {
    return cpu_freq_hz * cfg.slot_s / (cfg.cycles_per_bit * cfg.packet_bits);
}

int downlink_packets(const NetworkConfig& cfg, std::size_t i) {
    const UserTypeParams& u = cfg.user_types.at(i);
    return cfg.downlink_uses_request_size ? u.request_packets : u.result_packets;
}

std::string config_hash(const Scenario& s) {
    const std::string text = scenario_to_json(s).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace mechet
