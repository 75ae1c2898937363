#pragma once

// Reference computations for the tests. These deliberately avoid the library's
// rollout and constraint code so that agreement is evidence, not tautology.

#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "msf/fleet_problem.hpp"

namespace oracles {

struct Pose {
    double x, y, th;
};

inline std::vector<std::vector<Pose>> euler(const msf::FleetState& x0,
                                            const std::vector<msf::FleetInput>& seq, double dt) {
    std::vector<std::vector<Pose>> out(1);
    for (const auto& a : x0.agents) out[0].push_back({a.x, a.y, a.theta});
    for (const auto& u : seq) {
        auto next = out.back();
        for (std::size_t i = 0; i < next.size(); ++i) {
            const Pose p = next[i];
            next[i] = {p.x + dt * u.agents[i].v * std::cos(p.th), p.y + dt * u.agents[i].v * std::sin(p.th),
                       p.th + dt * u.agents[i].omega};
        }
        out.push_back(std::move(next));
    }
    return out;
}

inline double head_on_objective(const msf::FleetNlpSpec& s, const std::vector<msf::FleetInput>& seq) {
    double f = 0.0;
    for (std::size_t k = 0; k < seq.size(); ++k) {
        for (std::size_t i = 0; i < seq[k].size(); ++i) {
            const auto& t = s.input_target[k].agents[i];
            const double dv = seq[k].agents[i].v - t.v;
            const double dw = seq[k].agents[i].omega - t.omega;
            f += s.input_weight[k] * (dv * dv + dw * dw);
        }
    }
    return f;
}

/// Max violation of the hard constraints in the solver's residual units.
inline double independent_violation(const msf::FleetNlpSpec& s, const std::vector<msf::FleetInput>& seq) {
    const auto& c = *s.constraints;
    double worst = 0.0;
    const auto traj = euler(s.x0, seq, s.dt);
    for (std::size_t k = 1; k < traj.size(); ++k) {
        const auto& P = traj[k];
        for (std::size_t i = 0; i < P.size(); ++i) {
            for (std::size_t j = i + 1; j < P.size(); ++j) {
                const double d2 = (P[i].x - P[j].x) * (P[i].x - P[j].x) + (P[i].y - P[j].y) * (P[i].y - P[j].y);
                worst = std::max(worst, -(d2 - c.delta_a * c.delta_a) / (2.0 * c.delta_a));
            }
            const std::array<double, 4> clear{P[i].x - c.arena.x_min, c.arena.x_max - P[i].x,
                                              P[i].y - c.arena.y_min, c.arena.y_max - P[i].y};
            for (double w : clear) worst = std::max(worst, c.delta_w - w);
        }
    }
    if (s.terminal_rest) {
        for (const auto& a : seq.back().agents) worst = std::max(worst, std::abs(a.v));
    }
    return worst;
}

struct LatticeResult {
    bool feasible = false;
    double objective = std::numeric_limits<double>::infinity();
    std::vector<msf::FleetInput> best;
};

/// Exhaustive search over v in a uniform lattice on [v_lo, v_hi] for every
/// (step, agent), with omega held at zero.
inline LatticeResult head_on_lattice(const msf::FleetNlpSpec& s, int levels) {
    const std::size_t n = s.x0.size();
    const std::size_t N = s.horizon;
    const std::size_t dims = n * N;
    std::vector<double> grid(static_cast<std::size_t>(levels));
    for (int l = 0; l < levels; ++l) {
        grid[static_cast<std::size_t>(l)] =
            s.input_lower.v + (s.input_upper.v - s.input_lower.v) * l / (levels - 1);
    }
    LatticeResult best;
    std::vector<int> idx(dims, 0);
    std::vector<msf::FleetInput> seq(N, msf::FleetInput::zeros(n));
    while (true) {
        for (std::size_t d = 0; d < dims; ++d) seq[d / n].agents[d % n].v = grid[static_cast<std::size_t>(idx[d])];
        if (independent_violation(s, seq) <= 1e-12) {  // rounding slack only
            const double f = head_on_objective(s, seq);
            if (f < best.objective) {
                best.feasible = true;
                best.objective = f;
                best.best = seq;
            }
        }
        std::size_t d = 0;
        while (d < dims && ++idx[d] == levels) idx[d++] = 0;
        if (d == dims) break;
    }
    return best;
}

struct RandomInstance {
    msf::FleetNlpSpec spec;
    Eigen::VectorXd interior_point;
};

/// Feasible-by-construction fleet problem: the start is strictly admissible, so
/// the zero input sequence satisfies every hard constraint.
template <class Rng>
RandomInstance random_fleet_problem(Rng& rng, std::size_t agents, std::size_t horizon) {
    std::uniform_real_distribution<double> pos(-1.6, 1.6);
    std::uniform_real_distribution<double> ang(-M_PI, M_PI);
    std::uniform_real_distribution<double> in(-1.9, 1.9);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    RandomInstance r;
    auto& s = r.spec;
    while (s.x0.size() < agents) {
        const msf::RobotState cand{pos(rng), pos(rng), ang(rng)};
        const bool apart = std::all_of(s.x0.agents.begin(), s.x0.agents.end(), [&](const msf::RobotState& a) {
            return std::hypot(a.x - cand.x, a.y - cand.y) > 0.3;
        });
        if (apart) s.x0.agents.push_back(cand);
    }
    s.horizon = horizon;
    s.dt = unit(rng) < 0.5 ? 0.02 : 0.05;
    s.input_target.assign(horizon, msf::FleetInput::zeros(agents));
    for (auto& u : s.input_target[0].agents) u = {in(rng), in(rng)};
    s.input_weight.assign(horizon, 1e-6);
    s.input_weight[0] = 1.0;
    if (unit(rng) < 0.5) {
        s.position_weight = 0.5;
        s.position_reference.assign(horizon, std::vector<msf::Point>(agents));
        for (auto& step : s.position_reference) {
            for (auto& p : step) p = {pos(rng), pos(rng)};
        }
        s.collision_weight = 3.0;
        s.collision_distance = 0.35;
    }
    s.constraints = msf::ConstraintSet{};
    s.terminal_rest = unit(rng) < 0.7;

    r.interior_point.resize(static_cast<Eigen::Index>(2 * agents * horizon));
    for (Eigen::Index k = 0; k < r.interior_point.size(); ++k) r.interior_point[k] = in(rng);
    return r;
}

}  // namespace oracles
