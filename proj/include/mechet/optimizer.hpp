#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mechet/config.hpp"
#include "mechet/queueing.hpp"
#include "mechet/simulator.hpp"

namespace mechet {

enum class Objective { Secp, Scp };
enum class EvalMethod { Analytical, Simulation };
enum class GridScale { Linear, Db };

const char* to_string(Objective o);
const char* to_string(EvalMethod m);
const char* to_string(GridScale s);
Objective objective_from_string(const std::string& s);
EvalMethod eval_method_from_string(const std::string& s);
GridScale grid_scale_from_string(const std::string& s);

/// A sweepable parameter. Indices are 0-based here; the text form is 1-based:
/// bias[i][k], theta[k], lambda_u, mu[k], d[i], t_tg[i].
struct ParamPath {
    enum class Kind { Bias, Theta, UserDensity, ServiceRate, TaskPackets, TargetLatency };
    Kind kind = Kind::Bias;
    std::size_t i = 0;
    std::size_t k = 0;

    static ParamPath parse(const std::string& text);
    std::string str() const;
};

/// Writes `value` (already on the linear scale) into the parameter.
/// theta[k] rescales tier k's density by 1/value and its service rate by value,
/// relative to the configuration passed in.
void apply_param(NetworkConfig& cfg, BiasMatrix& bias, const ParamPath& p, double value);

struct SweepSpec {
    std::string param = "bias[1][2]";
    double start = 0.0;
    double stop = 20.0;
    std::size_t steps = 41;
    GridScale scale = GridScale::Db;  // Db: grid values are dB, applied as 10^(v/10)
    Objective objective = Objective::Secp;
    EvalMethod method = EvalMethod::Analytical;
    SecpMethod secp_method = SecpMethod::Auto;
    SimulationOptions simulation;
    unsigned threads = 1;

    /// Throws ConfigError on steps < 2, start >= stop or an unknown parameter.
    void validate() const;
    std::vector<double> grid() const;
    double applied(double grid_value) const;
};

nlohmann::json to_json(const SweepSpec& s);

struct SweepPoint {
    double grid_value = 0.0;
    bool stable = true;
    double p_s = 0.0;
    double p_cp = 0.0;
    double p_s_half_width = 0.0;   // simulation only
    double p_cp_half_width = 0.0;  // simulation only
    double objective = 0.0;        // -inf where unstable
    double capability = 0.0;       // NCC sweeps only
};

struct SweepResult {
    SweepSpec spec;
    std::vector<SweepPoint> points;
    std::size_t argmax = 0;  // index into points; first maximum over stable points
    double argmax_value = 0.0;
    double best = 0.0;

    std::vector<double> grid() const;
    std::vector<double> values(double SweepPoint::*field) const;
};

/// Index of the first maximum over the stable points, or nullopt.
std::optional<std::size_t> stable_argmax(const std::vector<double>& values, const std::vector<bool>& stable);

/// Objective curve over the grid. Unstable points are flagged and score -inf.
/// Throws InstabilityError when every point is unstable.
SweepResult sweep(const NetworkConfig& cfg, const BiasMatrix& bias, const SweepSpec& spec);

/// Contiguous run of stable grid points around the argmax whose field value
/// exceeds `threshold`, as (first, last) grid values.
std::optional<std::pair<double, double>> interval_above(const SweepResult& r, double threshold,
                                                        double SweepPoint::*field = &SweepPoint::p_s);

struct FreeBias {
    std::size_t i = 0;
    std::size_t k = 0;
    double lo_db = 0.0;
    double hi_db = 20.0;
};

struct BiasSearch {
    Objective objective = Objective::Secp;
    EvalMethod method = EvalMethod::Analytical;
    SecpMethod secp_method = SecpMethod::Auto;
    SimulationOptions simulation;
    double step_db = 0.5;  // first-pass grid step
    int passes = 3;        // each later pass halves the step around the incumbent
    unsigned threads = 1;
};

struct BiasOptimum {
    BiasMatrix bias;
    double value = 0.0;
    double p_s = 0.0;
    double p_cp = 0.0;
    std::size_t evaluations = 0;
};

/// Coordinate descent over dB grids. Each type's row is first normalized so
/// its reference entry (the first tier that is not free, else the first free
/// one, which is then held fixed) is 0 dB; box bounds are relative to it.
BiasOptimum optimize_bias(const NetworkConfig& cfg, const BiasMatrix& bias, const std::vector<FreeBias>& free,
                          const BiasSearch& search);

/// Computation capability sum_j lambda_{m,j} mu_j.
double network_capability(const NetworkConfig& cfg);

/// Scales every tier's service rate so the capability equals `target`.
NetworkConfig with_capability(const NetworkConfig& cfg, double target);

struct NccSpec {
    std::size_t tier = 1;  // tier whose density/speed ratio is swept
    double theta_start = 0.5;
    double theta_stop = 3.0;
    std::size_t steps = 26;
    Objective objective = Objective::Secp;
    SecpMethod secp_method = SecpMethod::Auto;
    unsigned threads = 1;
};

/// For each theta: tier density / theta, service rate * theta, then p_s.
/// Throws NumericalError if the capability drifts by more than 1e-12 relative.
SweepResult ncc_sweep(const NetworkConfig& cfg, const BiasMatrix& bias, const NccSpec& spec);

/// CSV: grid value, objective, p_s, p_cp, stable (+ half widths for
/// simulation, + capability for NCC sweeps).
void write_sweep_csv(const std::string& path, const SweepResult& r);
nlohmann::json sweep_summary(const SweepResult& r, const std::string& config_hash);

}  // namespace mechet
