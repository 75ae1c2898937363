#include "msf/detector.hpp"

#include <cmath>
#include <string>

#include "msf/errors.hpp"

namespace msf {

std::string_view to_string(ResidualNorm n) {
    return n == ResidualNorm::FullState ? "full" : "position";
}

ResidualNorm parse_residual_norm(std::string_view s) {
    if (s == "full") return ResidualNorm::FullState;
    if (s == "position") return ResidualNorm::PositionOnly;
    throw InvalidArgument("unknown residual norm '" + std::string(s) + "'");
}

double state_residual(const FleetState& a, const FleetState& b, ResidualNorm norm) {
    if (a.size() != b.size()) throw InvalidArgument("state_residual: size mismatch");
    double sq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double dx = a.agents[i].x - b.agents[i].x;
        const double dy = a.agents[i].y - b.agents[i].y;
        sq += dx * dx + dy * dy;
        if (norm == ResidualNorm::FullState) {
            const double dth = a.agents[i].theta - b.agents[i].theta;
            sq += dth * dth;
        }
    }
    return std::sqrt(sq);
}

AnomalyDetector::AnomalyDetector(double dt, double epsilon, ResidualNorm norm)
    : dt_(dt), epsilon_(epsilon), norm_(norm) {
    if (!(epsilon > 0.0)) throw InvalidArgument("detector: epsilon must be positive");
    if (!(dt > 0.0)) throw InvalidArgument("detector: dt must be positive");
}

int AnomalyDetector::detect(const FleetState& x_a_now) {
    int flag = 0;
    last_residual_ = 0.0;
    if (prev_x_a_ && prev_u_c_) {
        const FleetState expected = step_fleet(*prev_x_a_, *prev_u_c_, dt_);
        last_residual_ = state_residual(x_a_now, expected, norm_);
        flag = last_residual_ >= epsilon_ ? 1 : 0;
    }
    prev_x_a_ = x_a_now;
    prev_u_c_.reset();
    history_.push_back(flag);
    residuals_.push_back(last_residual_);
    return flag;
}

void AnomalyDetector::record_command(const FleetInput& u_c) { prev_u_c_ = u_c; }

}  // namespace msf
