#pragma once

#include <string_view>

#include "msf/constraints.hpp"
#include "msf/dynamics.hpp"
#include "msf/fleet_problem.hpp"

namespace msf {

enum class AttackKind { None, Fdi, Covert };

std::string_view to_string(AttackKind k);
AttackKind parse_attack_kind(std::string_view s);

/// Actuation-channel FDI: u_a = gain * u_c + offset per agent. The sensor offset
/// is added to every transmitted pose; the benchmark scenario leaves it at zero.
struct FdiParams {
    double gain = -1.0;
    RobotInput offset{2.0, 0.0};
    RobotState sensor_offset{};
};

struct CovertParams {
    Point target{0.0, 0.0};
    double heading_gain = 4.0;
    double creep_speed = 0.1;  ///< forward speed while turning toward the target
};

struct AttackSpec {
    AttackKind kind = AttackKind::None;
    double t_start = 5.0;
    double t_end = 10.0;  ///< exclusive
    FdiParams fdi{};
    CovertParams covert{};

    void validate(double duration) const;
    bool active(double t) const;
};

/// Fabricated trajectory fed to the networked controller during a covert attack.
struct CovertState {
    FleetState x_a;
    bool initialized = false;
};

FleetInput fdi_input(const FleetInput& u_c, const FdiParams& p);

/// Saturated greedy pursuit of the target point by every agent.
FleetInput covert_attack_input(const FleetState& x_true, const CovertParams& p, const ConstraintSet& c);

/// Seeds the fabricated state with the true state on first use, then advances it
/// with the command the controller actually sent: X_a <- f_d(X_a, u_c).
FleetState covert_state_update(CovertState& cs, const FleetInput& u_c,
                               const FleetState& x_true_at_start, double dt);

struct AttackOutput {
    FleetInput u_a;
    FleetState x_a;
};

/// Man-in-the-middle on both network channels. Outside the window: identity.
class Adversary {
public:
    Adversary(AttackSpec spec, ConstraintSet constraints, double dt);

    /// Sensor channel: what the controller receives for the current step.
    FleetState sense(double t, const FleetState& x_true);
    /// Actuation channel: what the plant-side filter receives.
    FleetInput actuate(double t, const FleetInput& u_c, const FleetState& x_true);

    const AttackSpec& spec() const { return spec_; }
    const CovertState& covert_state() const { return covert_; }

private:
    AttackSpec spec_;
    ConstraintSet constraints_;
    double dt_;
    CovertState covert_;
};

/// Both channels for one step (sense, then actuate). Needs u_c up front, so it
/// suits tests and offline replay; the closed loop uses Adversary directly.
AttackOutput apply(const AttackSpec& spec, double t, const FleetInput& u_c, const FleetState& x_true,
                   CovertState& cs, const ConstraintSet& c, double dt);

}  // namespace msf
