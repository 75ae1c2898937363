#include "msf/safety_filter.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "msf/errors.hpp"
#include "msf/fleet_problem.hpp"

namespace msf {

std::string_view to_string(FilterMode m) {
    switch (m) {
        case FilterMode::PassThrough: return "pass-through";
        case FilterMode::Modified: return "modified";
        case FilterMode::Fallback: return "fallback";
    }
    return "unknown";
}

void FilterConfig::validate() const {
    if (horizon < 1) throw InvalidArgument("filter: horizon must be >= 1");
    if (!(dt > 0.0)) throw InvalidArgument("filter: dt must be positive");
    if (!(pass_tol >= 0.0) || !(later_input_weight >= 0.0)) {
        throw InvalidArgument("filter: tolerances and weights must be non-negative");
    }
    constraints.validate();
    solver.validate();
}

namespace {

double input_max_norm(const ConstraintSet& c) {
    const double v = std::max(std::abs(c.v_bounds.lo), std::abs(c.v_bounds.hi));
    const double w = std::max(std::abs(c.omega_bounds.lo), std::abs(c.omega_bounds.hi));
    return std::hypot(v, w);
}

/// Hard-constraint margins in the optimizer's own units: the scaled squared-distance
/// residual for pairs and the plain clearance for walls.
bool residuals_within(const FleetState& x, const ConstraintSet& c, double tol) {
    const double da = c.delta_a;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto& a = x.agents[i];
        for (std::size_t j = i + 1; j < x.size(); ++j) {
            const double dx = a.x - x.agents[j].x;
            const double dy = a.y - x.agents[j].y;
            if ((dx * dx + dy * dy - da * da) / (2.0 * da) < -tol) return false;
        }
    }
    return min_wall_clearance(x, c) >= c.delta_w - tol;
}

/// Rollout-and-check of a full candidate sequence. States must meet the residual
/// tolerance and, as distances, the acceptance tolerance.
bool candidate_admissible(const FleetState& x, const std::vector<FleetInput>& seq,
                          const ConstraintSet& c, double residual_tol, double tol,
                          StateTrajectory* traj_out, double dt) {
    for (const auto& u : seq) {
        for (const auto& a : u.agents) {
            if (!input_admissible(a, c)) return false;
        }
    }
    for (const auto& a : seq.back().agents) {
        if (a.v != 0.0) return false;
    }
    StateTrajectory traj = rollout(x, seq, dt);
    for (std::size_t k = 1; k < traj.states.size(); ++k) {
        if (!residuals_within(traj.states[k], c, residual_tol)) return false;
        if (!state_admissible(traj.states[k], c, tol)) return false;
    }
    if (traj_out) *traj_out = std::move(traj);
    return true;
}

}  // namespace

double agent_intervention(const RobotInput& u_a, const RobotInput& u_s, const ConstraintSet& c) {
    return std::hypot(u_a.v - u_s.v, u_a.omega - u_s.omega) / (2.0 * input_max_norm(c));
}

double intervention(const FleetInput& u_a, const FleetInput& u_s, const ConstraintSet& c) {
    if (u_a.size() != u_s.size()) throw InvalidArgument("intervention: size mismatch");
    if (u_a.size() == 0) return 0.0;
    double sq = 0.0;
    for (std::size_t i = 0; i < u_a.size(); ++i) {
        const double dv = u_a.agents[i].v - u_s.agents[i].v;
        const double dw = u_a.agents[i].omega - u_s.agents[i].omega;
        sq += dv * dv + dw * dw;
    }
    const double umax = input_max_norm(c) * std::sqrt(static_cast<double>(u_a.size()));
    return std::sqrt(sq) / (2.0 * umax);
}

BackupTrajectory shift_backup(const BackupTrajectory& prev) {
    if (prev.inputs.empty() || prev.states.states.size() != prev.inputs.size() + 1) {
        throw InvalidArgument("shift_backup: malformed backup");
    }
    BackupTrajectory next;
    next.inputs.assign(prev.inputs.begin() + 1, prev.inputs.end());
    next.inputs.push_back(FleetInput::zeros(prev.inputs.front().size()));
    next.states = rollout(prev.states.states[1], next.inputs, prev.states.dt);
    next.certified_at = prev.certified_at + 1;
    return next;
}

BackupCheck validate_backup(const BackupTrajectory& b, const ConstraintSet& c, double tol) {
    BackupCheck out;
    if (b.inputs.empty() || b.states.states.size() != b.inputs.size() + 1) return out;

    const StateTrajectory again = rollout(b.states.states.front(), b.inputs, b.states.dt);
    out.rollout_consistent = again.states == b.states.states;

    out.inputs_in_box = std::all_of(b.inputs.begin(), b.inputs.end(), [&](const FleetInput& u) {
        return std::all_of(u.agents.begin(), u.agents.end(),
                           [&](const RobotInput& a) { return input_admissible(a, c); });
    });

    out.states_admissible = true;
    double worst = 0.0;
    for (const auto& x : again.states) {
        worst = std::min({worst, min_pairwise_distance(x) - c.delta_a, min_wall_clearance(x, c) - c.delta_w});
        if (!state_admissible(x, c, tol)) out.states_admissible = false;
    }
    out.worst_margin = worst;
    out.terminal = in_terminal_set(again.states.back(), b.inputs.back(), c, tol);
    return out;
}

FilterOutcome filter_step(const FleetState& x, const FleetInput& u_a, const BackupTrajectory* prev,
                          const FilterConfig& cfg, long step) {
    if (x.size() != u_a.size()) throw InvalidArgument("filter_step: state/input size mismatch");
    if (!is_finite(x) || !is_finite(u_a)) throw InvalidArgument("filter_step: non-finite argument");
    if (prev && (prev->inputs.size() != cfg.horizon || prev->inputs.front().size() != x.size())) {
        throw InvalidArgument("filter_step: previous backup does not match the configuration");
    }
    const std::size_t n = x.size();
    const std::size_t N = cfg.horizon;
    const ConstraintSet& c = cfg.constraints;
    // Pass-through and the optimizer share half the acceptance tolerance in residual
    // units, so any state admitted at one step keeps the zero-tail completion feasible
    // at the next, and a solved input passes the pass-through test when resubmitted.
    const double tol = cfg.solver.feas_tol;
    const double inner_tol = 0.5 * tol;

    const auto finish = [&](FilterOutcome out) {
        out.intervention = intervention(u_a, out.u_s, c);
        out.agent_intervention.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            out.agent_intervention[i] = agent_intervention(u_a.agents[i], out.u_s.agents[i], c);
        }
        out.backup.certified_at = step;
        return out;
    };

    // Pass-through: complete u_a with the tail of the shifted backup, then with
    // the terminal policy alone. Either completion certifies u_a unchanged.
    std::vector<std::vector<FleetInput>> completions;
    if (prev && N >= 2) {
        std::vector<FleetInput> seq{u_a};
        for (std::size_t k = 2; k < N; ++k) seq.push_back(prev->inputs[k]);
        seq.push_back(FleetInput::zeros(n));
        completions.push_back(std::move(seq));
    }
    {
        std::vector<FleetInput> seq{u_a};
        for (std::size_t k = 1; k < N; ++k) seq.push_back(FleetInput::zeros(n));
        if (N == 1) {
            // With a one-step horizon the applied input itself must be the rest input.
            bool at_rest = std::all_of(u_a.agents.begin(), u_a.agents.end(),
                                       [](const RobotInput& a) { return a.v == 0.0; });
            if (at_rest) completions.push_back(std::move(seq));
        } else {
            completions.push_back(std::move(seq));
        }
    }
    for (auto& seq : completions) {
        StateTrajectory traj;
        if (candidate_admissible(x, seq, c, inner_tol, tol, &traj, cfg.dt)) {
            FilterOutcome out;
            out.u_s = u_a;
            out.mode = FilterMode::PassThrough;
            out.backup.inputs = std::move(seq);
            out.backup.states = std::move(traj);
            return finish(std::move(out));
        }
    }

    // Least-deviation problem on the first input, warm-started from the shifted backup.
    FleetNlpSpec spec;
    spec.x0 = x;
    spec.dt = cfg.dt;
    spec.horizon = N;
    spec.input_lower = {c.v_bounds.lo, c.omega_bounds.lo};
    spec.input_upper = {c.v_bounds.hi, c.omega_bounds.hi};
    spec.input_target.assign(N, FleetInput::zeros(n));
    spec.input_target[0] = u_a;
    spec.input_weight.assign(N, cfg.later_input_weight);
    spec.input_weight[0] = 1.0;
    spec.constraints = c;
    spec.terminal_rest = true;
    const NlpProblem problem = make_fleet_problem(spec);

    std::optional<BackupTrajectory> shifted;
    if (prev) shifted = shift_backup(*prev);
    const Eigen::VectorXd warm = shifted
        ? pack_inputs(shifted->inputs)
        : pack_inputs(std::vector<FleetInput>(N, FleetInput::zeros(n)));

    SolverConfig scfg = cfg.solver;
    scfg.feas_tol = inner_tol;
    SolveResult result = solve(problem, warm, scfg);
    if (result.status == SolveStatus::Optimal || result.status == SolveStatus::FeasibleSuboptimal) {
        std::vector<FleetInput> seq = unpack_inputs(result.z, n, N);
        for (auto& a : seq.back().agents) a.v = 0.0;
        StateTrajectory traj;
        if (candidate_admissible(x, seq, c, tol, tol, &traj, cfg.dt)) {
            FilterOutcome out;
            out.u_s = seq.front();
            out.mode = FilterMode::Modified;
            out.backup.inputs = std::move(seq);
            out.backup.states = std::move(traj);
            out.solver = std::move(result);
            return finish(std::move(out));
        }
    }

    if (!shifted) {
        throw InitialInfeasibility("safety filter: no admissible input sequence at step " +
                                   std::to_string(step) + " and no previous backup (solver status " +
                                   std::string(to_string(result.status)) + ")");
    }
    std::clog << "[msf] safety filter fallback at step " << step << " (solver status "
              << to_string(result.status) << ")\n";
    FilterOutcome out;
    out.u_s = shifted->inputs.front();
    out.mode = FilterMode::Fallback;
    out.backup = std::move(*shifted);
    out.solver = std::move(result);
    return finish(std::move(out));
}

SafetyFilter::SafetyFilter(FilterConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

FilterOutcome SafetyFilter::step(const FleetState& x, const FleetInput& u_a) {
    FilterOutcome out = filter_step(x, u_a, backup_ ? &*backup_ : nullptr, cfg_, step_);
    if (out.mode == FilterMode::Fallback) ++fallbacks_;
    backup_ = out.backup;
    ++step_;
    return out;
}

}  // namespace msf
