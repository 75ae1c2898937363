#include "msf/tracking_controller.hpp"

#include <cmath>
#include <numbers>

#include "msf/errors.hpp"

namespace msf {

void ReferenceSpec::validate() const {
    if (!(r0 > 0.0) || fleet_size < 1 || !std::isfinite(w0)) {
        throw InvalidArgument("reference: r0 must be positive and the fleet non-empty");
    }
}

Point reference(double t, std::size_t i, const ReferenceSpec& spec) {
    if (i >= spec.fleet_size) throw InvalidArgument("reference: agent index out of range");
    const double phase = spec.w0 * t +
                         2.0 * std::numbers::pi / static_cast<double>(spec.fleet_size) * static_cast<double>(i);
    return {spec.r0 * std::sin(phase), spec.r0 * std::cos(phase)};
}

void TrackerConfig::validate() const {
    if (horizon < 1) throw InvalidArgument("tracker: horizon must be >= 1");
    if (position_weight < 0.0 || input_weight < 0.0 || collision_weight < 0.0 || collision_margin < 0.0) {
        throw InvalidArgument("tracker: weights must be non-negative");
    }
    if (!(dt > 0.0)) throw InvalidArgument("tracker: dt must be positive");
    solver.validate();
}

TrackerSolution compute_command(const FleetState& x_a, double t, const TrackerConfig& cfg,
                                const ReferenceSpec& spec, const ConstraintSet& c,
                                const std::optional<Eigen::VectorXd>& warm_start) {
    if (!is_finite(x_a)) throw InvalidArgument("tracker: non-finite state");
    if (x_a.size() != spec.fleet_size) throw InvalidArgument("tracker: fleet size mismatch");
    const std::size_t n = x_a.size();
    const std::size_t H = cfg.horizon;

    FleetNlpSpec p;
    p.x0 = x_a;
    p.dt = cfg.dt;
    p.horizon = H;
    p.input_lower = {c.v_bounds.lo, c.omega_bounds.lo};
    p.input_upper = {c.v_bounds.hi, c.omega_bounds.hi};
    p.input_weight.assign(H, cfg.input_weight);
    p.position_weight = cfg.position_weight;
    p.position_reference.resize(H);
    for (std::size_t k = 0; k < H; ++k) {
        const double tk = t + static_cast<double>(k + 1) * cfg.dt;
        p.position_reference[k].reserve(n);
        for (std::size_t i = 0; i < n; ++i) p.position_reference[k].push_back(reference(tk, i, spec));
    }
    p.collision_weight = cfg.collision_weight;
    p.collision_distance = c.delta_a + cfg.collision_margin;

    const NlpProblem problem = make_fleet_problem(p);
    TrackerSolution out;
    out.result = solve(problem, warm_start, cfg.solver);
    out.sequence = out.result.z;
    out.command.agents.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.command.agents[i] = {out.sequence[static_cast<Eigen::Index>(2 * i)],
                                 out.sequence[static_cast<Eigen::Index>(2 * i + 1)]};
    }
    return out;
}

TrackingController::TrackingController(TrackerConfig cfg, ReferenceSpec spec, ConstraintSet constraints)
    : cfg_(std::move(cfg)), spec_(spec), constraints_(std::move(constraints)) {
    cfg_.validate();
    spec_.validate();
    constraints_.validate();
}

FleetInput TrackingController::command(const FleetState& x_a, double t) {
    TrackerSolution sol = compute_command(x_a, t, cfg_, spec_, constraints_, warm_);
    const Eigen::Index stride = static_cast<Eigen::Index>(2 * x_a.size());
    Eigen::VectorXd shifted = Eigen::VectorXd::Zero(sol.sequence.size());
    shifted.head(sol.sequence.size() - stride) = sol.sequence.tail(sol.sequence.size() - stride);
    shifted.tail(stride) = sol.sequence.tail(stride);
    warm_ = std::move(shifted);
    last_ = std::move(sol.result);
    return sol.command;
}

}  // namespace msf
