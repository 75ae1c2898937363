#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "msf/dynamics.hpp"

namespace msf {

enum class ResidualNorm { FullState, PositionOnly };

std::string_view to_string(ResidualNorm n);
ResidualNorm parse_residual_norm(std::string_view s);

/// One-step prediction residual test at the networked controller:
///   a(t) = 1  iff  |X_a(t) - f_d(X_a(t-1), U_c(t-1))| >= epsilon.
/// Purely observational: nothing in the control path reads its output.
class AnomalyDetector {
public:
    explicit AnomalyDetector(double dt, double epsilon = 1e-6, ResidualNorm norm = ResidualNorm::FullState);

    /// Evaluates the state received at this step; returns 0 until a prior
    /// (state, command) pair exists.
    int detect(const FleetState& x_a_now);
    /// Records the command sent at this step for the next prediction.
    void record_command(const FleetInput& u_c);

    double epsilon() const { return epsilon_; }
    double last_residual() const { return last_residual_; }
    const std::vector<int>& history() const { return history_; }
    const std::vector<double>& residuals() const { return residuals_; }

private:
    double dt_;
    double epsilon_;
    ResidualNorm norm_;
    std::optional<FleetState> prev_x_a_;
    std::optional<FleetInput> prev_u_c_;
    double last_residual_ = 0.0;
    std::vector<int> history_;
    std::vector<double> residuals_;
};

/// Residual norm between two fleet states.
double state_residual(const FleetState& a, const FleetState& b, ResidualNorm norm);

}  // namespace msf
