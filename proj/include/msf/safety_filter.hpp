#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "msf/constraints.hpp"
#include "msf/dynamics.hpp"
#include "msf/optimizer.hpp"

namespace msf {

/// N-step input sequence with its rollout. Ends at rest in a separated,
/// wall-clear configuration, which certifies every later step by shifting.
struct BackupTrajectory {
    std::vector<FleetInput> inputs;  ///< length N
    StateTrajectory states;          ///< length N + 1
    long certified_at = 0;
};

enum class FilterMode { PassThrough, Modified, Fallback };

std::string_view to_string(FilterMode m);

struct FilterConfig {
    std::size_t horizon = 3;
    double dt = 0.02;
    ConstraintSet constraints{};
    SolverConfig solver{};
    double pass_tol = 1e-9;
    /// Weight on inputs after the first; keeps the later inputs well posed.
    double later_input_weight = 1e-6;

    void validate() const;
};

struct FilterOutcome {
    FleetInput u_s;
    FilterMode mode = FilterMode::PassThrough;
    double intervention = 0.0;                ///< whole fleet; in [0, 1] when u_a is inside the box
    std::vector<double> agent_intervention;  ///< same metric per agent
    BackupTrajectory backup;
    std::optional<SolveResult> solver;  ///< set whenever the optimizer ran
};

/// |u_a - u_s| / (2 |u_max|), with u_max stacked over the fleet.
double intervention(const FleetInput& u_a, const FleetInput& u_s, const ConstraintSet& c);
double agent_intervention(const RobotInput& u_a, const RobotInput& u_s, const ConstraintSet& c);

/// Drops the first input, appends the zero (terminal) input, re-rolls from states[1].
BackupTrajectory shift_backup(const BackupTrajectory& prev);

struct BackupCheck {
    bool rollout_consistent = false;
    bool inputs_in_box = false;
    bool states_admissible = false;
    bool terminal = false;
    double worst_margin = 0.0;  ///< most negative state margin over all steps (0 if none violated)

    bool valid() const { return rollout_consistent && inputs_in_box && states_admissible && terminal; }
};

/// Independent re-validation through dynamics + constraints.
BackupCheck validate_backup(const BackupTrajectory& b, const ConstraintSet& c, double tol);

/// One step of the predictive safety filter. `x` must be the true plant state.
/// Throws InitialInfeasibility if there is no previous backup and the optimizer
/// finds no admissible sequence.
FilterOutcome filter_step(const FleetState& x, const FleetInput& u_a,
                          const BackupTrajectory* prev, const FilterConfig& cfg, long step = 0);

/// Stateful wrapper that carries the backup from one step to the next.
class SafetyFilter {
public:
    explicit SafetyFilter(FilterConfig cfg);

    FilterOutcome step(const FleetState& x, const FleetInput& u_a);

    const std::optional<BackupTrajectory>& backup() const { return backup_; }
    const FilterConfig& config() const { return cfg_; }
    long steps() const { return step_; }
    long fallback_count() const { return fallbacks_; }

private:
    FilterConfig cfg_;
    std::optional<BackupTrajectory> backup_;
    long step_ = 0;
    long fallbacks_ = 0;
};

}  // namespace msf
