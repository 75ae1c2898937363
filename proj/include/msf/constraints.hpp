#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "msf/dynamics.hpp"

namespace msf {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double value) const { return value >= lo && value <= hi; }
};

/// Axis-aligned arena [x_min, x_max] x [y_min, y_max].
struct Arena {
    double x_min = -2.0;
    double x_max = 2.0;
    double y_min = -2.0;
    double y_max = 2.0;
};

/// Admissible set: inter-agent separation, wall clearance and input boxes.
/// Defaults are the 20-robot benchmark values.
struct ConstraintSet {
    double delta_a = 0.2;
    double delta_w = 0.2;
    Interval v_bounds{-2.0, 2.0};
    Interval omega_bounds{-2.0, 2.0};
    Arena arena{};

    /// Throws InvalidArgument when an invariant does not hold.
    void validate() const;
};

enum class Wall : int { XMin = 0, XMax = 1, YMin = 2, YMax = 3 };

struct PairDistance {
    std::size_t i = 0;
    std::size_t j = 0;
    double distance = 0.0;
};

struct WallClearance {
    std::size_t agent = 0;
    Wall wall = Wall::XMin;
    double clearance = 0.0;  ///< negative when the agent is outside the arena
};

struct AdmissibilityReport {
    double min_pairwise = 0.0;  ///< +inf for a single agent
    double min_wall = 0.0;
    bool input_ok = true;
    bool state_ok = true;
    std::vector<PairDistance> violating_pairs;
};

/// Euclidean (x, y) distances for every i < j, in lexicographic order.
std::vector<PairDistance> pairwise_distances(const FleetState& x);

/// Four perpendicular clearances per agent, ordered XMin, XMax, YMin, YMax.
std::vector<WallClearance> wall_clearances(const FleetState& x, const ConstraintSet& c);

double min_pairwise_distance(const FleetState& x);
double min_wall_clearance(const FleetState& x, const ConstraintSet& c);

bool input_admissible(const RobotInput& u, const ConstraintSet& c);

/// state_ok uses the non-strict margins exactly (tie counts as admissible).
AdmissibilityReport check_admissible(const FleetState& x, const FleetInput& u,
                                     const ConstraintSet& c);

/// Same test with an explicit slack on the state margins.
bool state_admissible(const FleetState& x, const ConstraintSet& c, double tol);

/// Terminal rest set: separated, clear of walls, and every v at rest (omega free).
bool in_terminal_set(const FleetState& x, const FleetInput& u_last, const ConstraintSet& c,
                     double tol);

}  // namespace msf
