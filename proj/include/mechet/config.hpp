#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"

namespace mechet {

double dbm_to_mw(double dbm);
double mw_to_dbm(double mw);
double db_to_linear(double db);
double linear_to_db(double linear);

struct TierParams {
    double density_fraction = 1.0;  // p_{m,k}
    double tx_power_mw = 1.0;       // P_{m,k}
    double service_rate = 1.0;      // mu_k, packets per slot
    double cpu_freq_hz = 0.0;       // informational only
};

struct UserTypeParams {
    double portion = 1.0;  // p_{u,i}
    int task_packets = 1;  // d^(c)
    int request_packets = 1;
    int result_packets = 1;
    double tx_power_mw = 199.52623149688796;  // 23 dBm
    double target_latency_s = 2e-3;
    std::vector<double> coverage_up;    // beta^(u)_{i,k}, one per tier
    std::vector<double> coverage_down;  // beta^(d)_{i,k}, one per tier
};

struct NetworkConfig {
    double server_density = 4e-5;  // lambda_m, nodes/m^2
    double user_density = 12e-4;   // lambda_u, nodes/m^2
    std::vector<TierParams> tiers;
    std::vector<UserTypeParams> user_types;
    double pathloss = 4.0;
    double reuse = 0.75;  // kappa
    double bandwidth_up_hz = 5e6;
    double bandwidth_down_hz = 1e7;
    double packet_bits = 8e5;  // U_s
    double cycles_per_bit = 1400.0;
    double slot_s = 1e-3;
    double noise_dbm = -104.0;  // informational, the model is SIR based

    // Use the request size for the downlink too instead of result_packets.
    bool downlink_uses_request_size = false;
    // Scale arrivals by the uplink coverage target (only delivered requests
    // reach the server).
    bool thinned_arrivals = true;

    std::size_t num_tiers() const { return tiers.size(); }
    std::size_t num_types() const { return user_types.size(); }
};

/// Association biases B_{i,k}, linear scale, row per user type.
class BiasMatrix {
public:
    BiasMatrix() = default;
    BiasMatrix(std::size_t types, std::size_t tiers, double linear = 1.0);

    double at(std::size_t i, std::size_t k) const { return values_[i * tiers_ + k]; }
    void set(std::size_t i, std::size_t k, double linear);
    double db(std::size_t i, std::size_t k) const { return linear_to_db(at(i, k)); }
    void set_db(std::size_t i, std::size_t k, double db) { set(i, k, db_to_linear(db)); }

    std::size_t types() const { return types_; }
    std::size_t tiers() const { return tiers_; }

    bool operator==(const BiasMatrix&) const = default;

private:
    std::size_t types_ = 0;
    std::size_t tiers_ = 0;
    std::vector<double> values_;
};

struct Scenario {
    NetworkConfig network;
    BiasMatrix bias;
};

/// Parameter table defaults: two tiers, two user types with d = (1, 2).
Scenario default_scenario();

Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& s);

Scenario load_config(const std::string& path);
void save_config(const Scenario& s, const std::string& path);

/// Throws ConfigError naming the offending field.
void validate(const NetworkConfig& cfg);
void validate(const NetworkConfig& cfg, const BiasMatrix& bias);

double derived_tier_density(const NetworkConfig& cfg, std::size_t k);
double derived_user_density(const NetworkConfig& cfg, std::size_t i);

/// Packets per slot implied by a CPU frequency: F T_s / (C_u U_s).
double service_rate_from_cpu(const NetworkConfig& cfg, double cpu_freq_hz);

/// Packets sent on the downlink for a type, honoring downlink_uses_request_size.
int downlink_packets(const NetworkConfig& cfg, std::size_t i);

/// FNV-1a over the canonical JSON dump, as 16 hex digits.
std::string config_hash(const Scenario& s);

}  // namespace mechet
