#include "msf/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "msf/errors.hpp"

namespace msf {

void ConstraintSet::validate() const {
    const auto ok = [](double v) { return std::isfinite(v); };
    if (!(delta_a > 0.0) || !(delta_w > 0.0) || !ok(delta_a) || !ok(delta_w)) {
        throw InvalidArgument("constraints: delta_a and delta_w must be positive");
    }
    if (!(v_bounds.lo < v_bounds.hi) || !(omega_bounds.lo < omega_bounds.hi)) {
        throw InvalidArgument("constraints: input bounds must satisfy lo < hi");
    }
    if (!(arena.x_min < arena.x_max) || !(arena.y_min < arena.y_max)) {
        throw InvalidArgument("constraints: degenerate arena");
    }
    if (arena.x_max - arena.x_min < 2.0 * delta_w || arena.y_max - arena.y_min < 2.0 * delta_w) {
        throw InvalidArgument("constraints: arena too small for the wall clearance");
    }
}

std::vector<PairDistance> pairwise_distances(const FleetState& x) {
    std::vector<PairDistance> out;
    const std::size_t n = x.size();
    out.reserve(n * (n > 0 ? n - 1 : 0) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = x.agents[i].x - x.agents[j].x;
            const double dy = x.agents[i].y - x.agents[j].y;
            out.push_back({i, j, std::hypot(dx, dy)});
        }
    }
    return out;
}

std::vector<WallClearance> wall_clearances(const FleetState& x, const ConstraintSet& c) {
    std::vector<WallClearance> out;
    out.reserve(4 * x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto& s = x.agents[i];
        out.push_back({i, Wall::XMin, s.x - c.arena.x_min});
        out.push_back({i, Wall::XMax, c.arena.x_max - s.x});
        out.push_back({i, Wall::YMin, s.y - c.arena.y_min});
        out.push_back({i, Wall::YMax, c.arena.y_max - s.y});
    }
    return out;
}

double min_pairwise_distance(const FleetState& x) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : pairwise_distances(x)) best = std::min(best, p.distance);
    return best;
}

double min_wall_clearance(const FleetState& x, const ConstraintSet& c) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& w : wall_clearances(x, c)) best = std::min(best, w.clearance);
    return best;
}

bool input_admissible(const RobotInput& u, const ConstraintSet& c) {
    return c.v_bounds.contains(u.v) && c.omega_bounds.contains(u.omega);
}

AdmissibilityReport check_admissible(const FleetState& x, const FleetInput& u,
                                     const ConstraintSet& c) {
    if (x.size() != u.size()) {
        throw InvalidArgument("check_admissible: state/input size mismatch");
    }
    AdmissibilityReport r;
    r.min_pairwise = std::numeric_limits<double>::infinity();
    for (const auto& p : pairwise_distances(x)) {
        r.min_pairwise = std::min(r.min_pairwise, p.distance);
        if (p.distance < c.delta_a) r.violating_pairs.push_back(p);
    }
    r.min_wall = min_wall_clearance(x, c);
    r.input_ok = std::all_of(u.agents.begin(), u.agents.end(),
                             [&](const RobotInput& a) { return input_admissible(a, c); });
    r.state_ok = r.min_pairwise >= c.delta_a && r.min_wall >= c.delta_w;
    return r;
}

bool state_admissible(const FleetState& x, const ConstraintSet& c, double tol) {
    return min_pairwise_distance(x) >= c.delta_a - tol && min_wall_clearance(x, c) >= c.delta_w - tol;
}

bool in_terminal_set(const FleetState& x, const FleetInput& u_last, const ConstraintSet& c,
                     double tol) {
    if (tol < 0.0) throw InvalidArgument("in_terminal_set: tol must be non-negative");
    if (x.size() != u_last.size()) {
        throw InvalidArgument("in_terminal_set: state/input size mismatch");
    }
    if (!state_admissible(x, c, tol)) return false;
    return std::all_of(u_last.agents.begin(), u_last.agents.end(),
                       [&](const RobotInput& a) { return std::abs(a.v) <= tol; });
}

}  // namespace msf
