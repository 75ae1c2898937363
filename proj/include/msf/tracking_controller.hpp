#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <optional>

#include "msf/constraints.hpp"
#include "msf/dynamics.hpp"
#include "msf/fleet_problem.hpp"
#include "msf/optimizer.hpp"

namespace msf {

/// Circular formation: agent i (0-based) follows
///   x = r0 sin(w0 t + 2 pi i / |I|),  y = r0 cos(w0 t + 2 pi i / |I|).
struct ReferenceSpec {
    double r0 = 1.5;
    double w0 = 0.4;
    std::size_t fleet_size = 20;

    void validate() const;
};

Point reference(double t, std::size_t i, const ReferenceSpec& spec);

struct TrackerConfig {
    std::size_t horizon = 20;
    double position_weight = 1.0;
    double input_weight = 1e-4;
    double collision_weight = 1e3;
    /// Soft penalty starts at delta_a + collision_margin.
    double collision_margin = 0.1;
    double dt = 0.02;
    SolverConfig solver{.stat_tol = 1e-5, .max_outer_iterations = 1, .max_inner_iterations = 100};

    void validate() const;
};

/// Receding-horizon tracker: minimizes position error to the reference,
/// input effort and a soft collision penalty over the box. Returns the first input.
/// `warm_start`, if given, is the packed input sequence to start from.
struct TrackerSolution {
    FleetInput command;
    Eigen::VectorXd sequence;
    SolveResult result;
};

TrackerSolution compute_command(const FleetState& x_a, double t, const TrackerConfig& cfg,
                                const ReferenceSpec& spec, const ConstraintSet& c,
                                const std::optional<Eigen::VectorXd>& warm_start = std::nullopt);

/// Keeps the previous solution as the next warm start (shifted by one step).
class TrackingController {
public:
    TrackingController(TrackerConfig cfg, ReferenceSpec spec, ConstraintSet constraints);

    /// Consumes the (possibly attacked) state received over the network.
    FleetInput command(const FleetState& x_a, double t);

    const std::optional<SolveResult>& last_result() const { return last_; }

private:
    TrackerConfig cfg_;
    ReferenceSpec spec_;
    ConstraintSet constraints_;
    std::optional<Eigen::VectorXd> warm_;
    std::optional<SolveResult> last_;
};

}  // namespace msf
