#include "msf/dynamics.hpp"

#include <cmath>
#include <string>

#include "msf/errors.hpp"

namespace msf {

namespace {

bool finite(const RobotState& s) {
    return std::isfinite(s.x) && std::isfinite(s.y) && std::isfinite(s.theta);
}

bool finite(const RobotInput& u) { return std::isfinite(u.v) && std::isfinite(u.omega); }

}  // namespace

RobotState step_unicycle(const RobotState& s, const RobotInput& u, double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw InvalidArgument("step_unicycle: dt must be positive and finite");
    }
    if (!finite(s) || !finite(u)) {
        throw InvalidArgument("step_unicycle: non-finite state or input");
    }
    // The plant, the filter prediction, the covert attacker and the detector all
    // go through this exact expression; bitwise agreement between them matters.
    return RobotState{s.x + dt * u.v * std::cos(s.theta),
                      s.y + dt * u.v * std::sin(s.theta),
                      s.theta + dt * u.omega};
}

FleetState step_fleet(const FleetState& x, const FleetInput& u, double dt) {
    if (x.size() != u.size()) {
        throw InvalidArgument("step_fleet: state has " + std::to_string(x.size()) +
                              " agents but input has " + std::to_string(u.size()));
    }
    FleetState next;
    next.agents.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        next.agents.push_back(step_unicycle(x.agents[i], u.agents[i], dt));
    }
    return next;
}

StateTrajectory rollout(const FleetState& x0, std::span<const FleetInput> inputs, double dt) {
    if (inputs.empty()) {
        throw InvalidArgument("rollout: need at least one input");
    }
    StateTrajectory traj;
    traj.dt = dt;
    traj.states.reserve(inputs.size() + 1);
    traj.states.push_back(x0);
    for (const auto& u : inputs) {
        traj.states.push_back(step_fleet(traj.states.back(), u, dt));
    }
    return traj;
}

bool is_finite(const FleetState& x) {
    for (const auto& s : x.agents) {
        if (!finite(s)) return false;
    }
    return true;
}

bool is_finite(const FleetInput& u) {
    for (const auto& a : u.agents) {
        if (!finite(a)) return false;
    }
    return true;
}

}  // namespace msf
