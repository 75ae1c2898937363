#include "msf/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "msf/errors.hpp"

namespace msf {

namespace {

// Window edges are compared with a small slack so k * dt lands on the intended side.
constexpr double kTimeSlack = 1e-9;

double wrap_angle(double a) {
    a = std::remainder(a, 2.0 * std::numbers::pi);
    return a;
}

FleetState offset_states(const FleetState& x, const RobotState& d) {
    if (d == RobotState{}) return x;
    FleetState out = x;
    for (auto& s : out.agents) {
        s.x += d.x;
        s.y += d.y;
        s.theta += d.theta;
    }
    return out;
}

}  // namespace

std::string_view to_string(AttackKind k) {
    switch (k) {
        case AttackKind::None: return "none";
        case AttackKind::Fdi: return "fdi";
        case AttackKind::Covert: return "covert";
    }
    return "unknown";
}

AttackKind parse_attack_kind(std::string_view s) {
    if (s == "none") return AttackKind::None;
    if (s == "fdi") return AttackKind::Fdi;
    if (s == "covert") return AttackKind::Covert;
    throw InvalidArgument("unknown attack kind '" + std::string(s) + "'");
}

void AttackSpec::validate(double duration) const {
    if (kind == AttackKind::None) return;
    if (!(t_start < t_end)) throw InvalidArgument("attack: t_start must be < t_end");
    if (t_start < 0.0 || t_end > duration + kTimeSlack) {
        throw InvalidArgument("attack: window must lie within the scenario duration");
    }
    if (kind == AttackKind::Covert && (!(covert.heading_gain > 0.0) || covert.creep_speed < 0.0)) {
        throw InvalidArgument("attack: covert gains must be positive");
    }
}

bool AttackSpec::active(double t) const {
    return kind != AttackKind::None && t >= t_start - kTimeSlack && t < t_end - kTimeSlack;
}

FleetInput fdi_input(const FleetInput& u_c, const FdiParams& p) {
    FleetInput out = u_c;
    for (auto& a : out.agents) {
        a.v = p.gain * a.v + p.offset.v;
        a.omega = p.gain * a.omega + p.offset.omega;
    }
    return out;
}

FleetInput covert_attack_input(const FleetState& x_true, const CovertParams& p, const ConstraintSet& c) {
    if (!(p.heading_gain > 0.0)) throw InvalidArgument("covert_attack_input: gain must be positive");
    FleetInput out = FleetInput::zeros(x_true.size());
    for (std::size_t i = 0; i < x_true.size(); ++i) {
        const RobotState& s = x_true.agents[i];
        const double dx = p.target.x - s.x;
        const double dy = p.target.y - s.y;
        if (std::hypot(dx, dy) < 1e-9) continue;
        const double err = wrap_angle(std::atan2(dy, dx) - s.theta);
        RobotInput& u = out.agents[i];
        u.omega = std::clamp(p.heading_gain * err, c.omega_bounds.lo, c.omega_bounds.hi);
        const double v = std::abs(err) < std::numbers::pi / 2.0 ? c.v_bounds.hi * std::cos(err) : p.creep_speed;
        u.v = std::clamp(v, c.v_bounds.lo, c.v_bounds.hi);
    }
    return out;
}

FleetState covert_state_update(CovertState& cs, const FleetInput& u_c, const FleetState& x_true_at_start,
                               double dt) {
    if (!cs.initialized) {
        cs.x_a = x_true_at_start;
        cs.initialized = true;
    }
    cs.x_a = step_fleet(cs.x_a, u_c, dt);
    return cs.x_a;
}

namespace {

FleetState sense_channel(const AttackSpec& spec, double t, const FleetState& x_true, CovertState& cs) {
    if (!spec.active(t)) {
        cs.initialized = false;
        return x_true;
    }
    switch (spec.kind) {
        case AttackKind::Covert:
            if (!cs.initialized) {
                cs.x_a = x_true;
                cs.initialized = true;
            }
            return cs.x_a;
        case AttackKind::Fdi:
            return offset_states(x_true, spec.fdi.sensor_offset);
        case AttackKind::None:
            break;
    }
    return x_true;
}

FleetInput actuate_channel(const AttackSpec& spec, const ConstraintSet& c, double dt, double t,
                           const FleetInput& u_c, const FleetState& x_true, CovertState& cs) {
    if (!spec.active(t)) return u_c;
    switch (spec.kind) {
        case AttackKind::Covert:
            covert_state_update(cs, u_c, x_true, dt);
            return covert_attack_input(x_true, spec.covert, c);
        case AttackKind::Fdi:
            return fdi_input(u_c, spec.fdi);
        case AttackKind::None:
            break;
    }
    return u_c;
}

}  // namespace

Adversary::Adversary(AttackSpec spec, ConstraintSet constraints, double dt)
    : spec_(std::move(spec)), constraints_(std::move(constraints)), dt_(dt) {}

FleetState Adversary::sense(double t, const FleetState& x_true) {
    return sense_channel(spec_, t, x_true, covert_);
}

FleetInput Adversary::actuate(double t, const FleetInput& u_c, const FleetState& x_true) {
    return actuate_channel(spec_, constraints_, dt_, t, u_c, x_true, covert_);
}

AttackOutput apply(const AttackSpec& spec, double t, const FleetInput& u_c, const FleetState& x_true,
                   CovertState& cs, const ConstraintSet& c, double dt) {
    if (u_c.size() != x_true.size()) throw InvalidArgument("apply: size mismatch");
    AttackOutput out;
    out.x_a = sense_channel(spec, t, x_true, cs);
    out.u_a = actuate_channel(spec, c, dt, t, u_c, x_true, cs);
    return out;
}

}  // namespace msf
