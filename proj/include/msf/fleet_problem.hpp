#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "msf/constraints.hpp"
#include "msf/dynamics.hpp"
#include "msf/optimizer.hpp"

namespace msf {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Single-shooting description of an N-step fleet input problem. Predicted
/// states are eliminated by rolling the Euler map forward from x0.
///
/// Decision layout: z[(k * agents + i) * 2 + {0: v, 1: omega}] for step k, agent i.
///
/// Objective:
///   sum_k input_weight[k] * |U_k - input_target[k]|^2
/// + position_weight  * sum_{k=1..N} sum_i |p_i^k - position_reference[k-1][i]|^2
/// + collision_weight * sum_{k=1..N} sum_{i<j} max(0, collision_distance - d_ij^k)^2
///
/// Hard constraints (when `constraints` is set), for every predicted step k = 1..N:
///   (d_ij^2 - delta_a^2) / (2 delta_a) >= 0   (reads as a distance margin near the boundary)
///   wall clearance - delta_w >= 0             (four walls per agent)
/// and, with terminal_rest, v_i = 0 on the last input of the horizon.
struct FleetNlpSpec {
    FleetState x0;
    double dt = 0.02;
    std::size_t horizon = 3;
    RobotInput input_lower{-2.0, -2.0};
    RobotInput input_upper{2.0, 2.0};

    std::vector<FleetInput> input_target;  ///< empty means the zero input
    std::vector<double> input_weight;      ///< one per step; empty means all zero

    std::vector<std::vector<Point>> position_reference;  ///< horizon entries of |I| points
    double position_weight = 0.0;
    double collision_weight = 0.0;
    double collision_distance = 0.0;

    std::optional<ConstraintSet> constraints;
    bool terminal_rest = false;
};

/// Residual counts and ordering of the hard constraints, exposed for tests.
struct FleetConstraintLayout {
    std::size_t agents = 0;
    std::size_t horizon = 0;
    std::size_t pairs_per_step() const { return agents * (agents - (agents > 0 ? 1 : 0)) / 2; }
    std::size_t walls_per_step() const { return 4 * agents; }
    std::size_t per_step() const { return pairs_per_step() + walls_per_step(); }
    std::size_t total() const { return horizon * per_step(); }
};

NlpProblem make_fleet_problem(const FleetNlpSpec& spec);

Eigen::VectorXd pack_inputs(std::span<const FleetInput> inputs);
std::vector<FleetInput> unpack_inputs(const Eigen::VectorXd& z, std::size_t agents,
                                      std::size_t horizon);

}  // namespace msf
