#pragma once

#include "buckstab/cascade.hpp"
#include "buckstab/sim.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace buckstab {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct StageConfig {
    /// Absent = "from-previous": the stage rides the previous stage's
    /// regulated output.
    std::optional<double> v_in;
    double l = 0.0;
    double c = 0.0;
    /// Absent = "open".
    std::optional<double> r_load;
    double v_ref = 0.0;
    double kp = 0.0;
    double ki = 0.0;
};

struct ModesConfig {
    Feedthrough feedthrough = Feedthrough::physical;
    /// Stage1's local resistor dropped in cascade analysis.
    bool cascade_r1_open = true;
    /// Linearize stage2 at its configured v_in instead of the bus voltage.
    bool cascade_vin2_standalone = false;
    /// Force stage1 z_out to zero in the cascade (stiff bus fixture).
    bool ideal_source = false;
};

struct SweepConfig {
    double f_min_hz = 10.0;
    double f_max_hz = 1e6;
    int points_per_decade = 100;
};

struct SystemConfig {
    std::vector<StageConfig> stages;
    ModesConfig modes;
    SweepConfig sweep;
    SimConfig sim;
};

/// Parse and validate a JSON config file. Schema violations name the
/// offending field path (e.g. "stages[0].ki"); physically invalid values
/// are rejected with the model's own error text.
SystemConfig parse_config(const std::filesystem::path& path);
SystemConfig parse_config_json(const nlohmann::json& j);

/// Standalone input voltage of a stage: its own v_in, or the previous
/// stage's regulated output for "from-previous".
double resolved_v_in(const SystemConfig& cfg, std::size_t index);

/// Stage in its standalone configuration (own load, resolved v_in).
StageSpec stage_spec(const SystemConfig& cfg, std::size_t index);

CascadeOptions cascade_options(const SystemConfig& cfg);
CascadeSimOptions cascade_sim_options(const SystemConfig& cfg);

}  // namespace buckstab
