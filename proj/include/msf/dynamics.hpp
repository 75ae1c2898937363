#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace msf {

/// Planar unicycle pose. Heading is never wrapped.
struct RobotState {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;

    bool operator==(const RobotState&) const = default;
};

struct RobotInput {
    double v = 0.0;      ///< translational velocity [m/s]
    double omega = 0.0;  ///< angular velocity [rad/s]

    bool operator==(const RobotInput&) const = default;
};

struct FleetState {
    std::vector<RobotState> agents;

    FleetState() = default;
    explicit FleetState(std::vector<RobotState> a) : agents(std::move(a)) {}
    std::size_t size() const { return agents.size(); }
    bool operator==(const FleetState&) const = default;
};

struct FleetInput {
    std::vector<RobotInput> agents;

    FleetInput() = default;
    explicit FleetInput(std::vector<RobotInput> a) : agents(std::move(a)) {}
    std::size_t size() const { return agents.size(); }
    bool operator==(const FleetInput&) const = default;

    static FleetInput zeros(std::size_t n) { return FleetInput(std::vector<RobotInput>(n)); }
};

/// states.size() == inputs.size() + 1 when produced by rollout().
struct StateTrajectory {
    std::vector<FleetState> states;
    double dt = 0.0;
};

/// Explicit Euler step of the unicycle kinematics.
RobotState step_unicycle(const RobotState& s, const RobotInput& u, double dt);

/// Per-agent step_unicycle; agents do not interact.
FleetState step_fleet(const FleetState& x, const FleetInput& u, double dt);

StateTrajectory rollout(const FleetState& x0, std::span<const FleetInput> inputs, double dt);

bool is_finite(const FleetState& x);
bool is_finite(const FleetInput& u);

}  // namespace msf
