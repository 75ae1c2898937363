#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "msf/adversary.hpp"
#include "msf/constraints.hpp"
#include "msf/detector.hpp"
#include "msf/dynamics.hpp"
#include "msf/optimizer.hpp"
#include "msf/tracking_controller.hpp"

namespace msf {

struct InitialConditions {
    std::vector<RobotState> states;  ///< explicit placement; empty means a generated ring
    double ring_radius = 1.75;
    double jitter = 0.0;  ///< uniform position jitter [m], drawn from `seed`
};

/// Every tunable of one closed-loop run. Defaults reproduce the 20-robot benchmark.
struct ScenarioConfig {
    std::size_t fleet_size = 20;
    double duration = 15.0;
    double dt = 0.02;
    double filter_dt = 0.02;
    std::size_t filter_horizon = 3;
    bool filter_enabled = true;
    double pass_tol = 1e-9;
    ConstraintSet constraints{};
    ReferenceSpec reference{};
    TrackerConfig tracker{};
    AttackSpec attack{};
    SolverConfig solver{};
    double detector_epsilon = 1e-6;
    ResidualNorm detector_norm = ResidualNorm::FullState;
    InitialConditions initial{};
    std::uint64_t seed = 0;

    std::size_t steps() const;
    /// Throws ConfigError on an invalid combination.
    void validate() const;
};

/// Flat `key -> value` view; keys are the dotted field names accepted in config files.
std::map<std::string, std::string> to_key_values(const ScenarioConfig& cfg);
/// Applies the given keys on top of `base`. Unknown keys and malformed values throw ConfigError.
/// filter_dt / tracker.dt follow dt and attack.fdi_offset_v follows constraints.v_max
/// unless set explicitly.
ScenarioConfig from_key_values(const std::map<std::string, std::string>& kv, ScenarioConfig base = {});

/// `key = value` lines, `#` starts a comment.
ScenarioConfig parse_config_text(const std::string& text);
ScenarioConfig load_config_file(const std::string& path);

/// Generated ring (equal spacing, headings along the direction of formation travel) or explicit list.
FleetState initial_state(const ScenarioConfig& cfg);

}  // namespace msf
