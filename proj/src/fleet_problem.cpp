#include "msf/fleet_problem.hpp"

#include <cmath>
#include <memory>
#include <string>

#include "msf/errors.hpp"

namespace msf {

namespace {

using Eigen::Index;
using Eigen::VectorXd;

/// d(x_k, y_k) / d(v_j, omega_j) for one agent, j < k.
struct Sensitivity {
    double xv = 0.0, xw = 0.0, yv = 0.0, yw = 0.0;
};

class FleetModel {
public:
    explicit FleetModel(FleetNlpSpec spec) : spec_(std::move(spec)), n_(spec_.x0.size()), N_(spec_.horizon) {
        if (N_ < 1) throw InvalidArgument("fleet problem: horizon must be >= 1");
        if (n_ < 1) throw InvalidArgument("fleet problem: empty fleet");
        if (!(spec_.dt > 0.0)) throw InvalidArgument("fleet problem: dt must be positive");
        if (!spec_.input_target.empty()) {
            if (spec_.input_target.size() != N_) throw InvalidArgument("fleet problem: input_target length");
            for (const auto& u : spec_.input_target) {
                if (u.size() != n_) throw InvalidArgument("fleet problem: input_target fleet size");
            }
        }
        if (!spec_.input_weight.empty() && spec_.input_weight.size() != N_) {
            throw InvalidArgument("fleet problem: input_weight length");
        }
        if (!spec_.position_reference.empty()) {
            if (spec_.position_reference.size() != N_) {
                throw InvalidArgument("fleet problem: position_reference length");
            }
            for (const auto& r : spec_.position_reference) {
                if (r.size() != n_) throw InvalidArgument("fleet problem: reference fleet size");
            }
        }
        if (spec_.constraints) spec_.constraints->validate();
        layout_ = {n_, N_};
        px_.resize((N_ + 1) * n_);
        py_.resize((N_ + 1) * n_);
        th_.resize((N_ + 1) * n_);
    }

    std::size_t dimension() const { return 2 * n_ * N_; }
    std::size_t col(std::size_t k, std::size_t i, std::size_t c) const { return (k * n_ + i) * 2 + c; }

    VectorXd lower() const {
        VectorXd lo(static_cast<Index>(dimension()));
        for (std::size_t m = 0; m < n_ * N_; ++m) {
            lo[static_cast<Index>(2 * m)] = spec_.input_lower.v;
            lo[static_cast<Index>(2 * m + 1)] = spec_.input_lower.omega;
        }
        return lo;
    }
    VectorXd upper() const {
        VectorXd hi(static_cast<Index>(dimension()));
        for (std::size_t m = 0; m < n_ * N_; ++m) {
            hi[static_cast<Index>(2 * m)] = spec_.input_upper.v;
            hi[static_cast<Index>(2 * m + 1)] = spec_.input_upper.omega;
        }
        return hi;
    }

    std::size_t num_inequalities() const { return spec_.constraints ? layout_.total() : 0; }
    std::size_t num_equalities() const { return spec_.terminal_rest ? n_ : 0; }

    double objective(const VectorXd& z, VectorXd* grad) {
        roll(z);
        const double dt = spec_.dt;
        double value = 0.0;
        if (grad) grad->setZero(static_cast<Index>(dimension()));

        for (std::size_t k = 0; k < N_; ++k) {
            const double w = spec_.input_weight.empty() ? 0.0 : spec_.input_weight[k];
            if (w == 0.0) continue;
            for (std::size_t i = 0; i < n_; ++i) {
                const RobotInput target =
                    spec_.input_target.empty() ? RobotInput{} : spec_.input_target[k].agents[i];
                const double dv = z[static_cast<Index>(col(k, i, 0))] - target.v;
                const double dw = z[static_cast<Index>(col(k, i, 1))] - target.omega;
                value += w * (dv * dv + dw * dw);
                if (grad) {
                    (*grad)[static_cast<Index>(col(k, i, 0))] += 2.0 * w * dv;
                    (*grad)[static_cast<Index>(col(k, i, 1))] += 2.0 * w * dw;
                }
            }
        }

        const bool tracking = !spec_.position_reference.empty() && spec_.position_weight != 0.0;
        const bool soft_collision = spec_.collision_weight != 0.0 && spec_.collision_distance > 0.0 && n_ > 1;
        if (!tracking && !soft_collision) return value;

        // dC/dp at predicted steps 1..N, then one reverse sweep per agent.
        gpx_.assign((N_ + 1) * n_, 0.0);
        gpy_.assign((N_ + 1) * n_, 0.0);
        for (std::size_t k = 1; k <= N_; ++k) {
            if (tracking) {
                const auto& ref = spec_.position_reference[k - 1];
                for (std::size_t i = 0; i < n_; ++i) {
                    const double ex = px(k, i) - ref[i].x;
                    const double ey = py(k, i) - ref[i].y;
                    value += spec_.position_weight * (ex * ex + ey * ey);
                    gpx_[k * n_ + i] += 2.0 * spec_.position_weight * ex;
                    gpy_[k * n_ + i] += 2.0 * spec_.position_weight * ey;
                }
            }
            if (soft_collision) {
                const double r = spec_.collision_distance;
                for (std::size_t i = 0; i < n_; ++i) {
                    for (std::size_t j = i + 1; j < n_; ++j) {
                        const double dx = px(k, i) - px(k, j);
                        const double dy = py(k, i) - py(k, j);
                        const double d2 = dx * dx + dy * dy;
                        if (d2 >= r * r) continue;
                        const double d = std::sqrt(d2);
                        const double gap = r - d;
                        value += spec_.collision_weight * gap * gap;
                        if (d > 0.0) {
                            const double s = -2.0 * spec_.collision_weight * gap / d;
                            gpx_[k * n_ + i] += s * dx;
                            gpy_[k * n_ + i] += s * dy;
                            gpx_[k * n_ + j] -= s * dx;
                            gpy_[k * n_ + j] -= s * dy;
                        }
                    }
                }
            }
        }
        if (!grad) return value;

        for (std::size_t i = 0; i < n_; ++i) {
            double ax = 0.0, ay = 0.0, ath = 0.0;  // adjoint of state k+1
            for (std::size_t k = N_; k-- > 0;) {
                ax += gpx_[(k + 1) * n_ + i];
                ay += gpy_[(k + 1) * n_ + i];
                const double th = theta(k, i);
                const double v = z[static_cast<Index>(col(k, i, 0))];
                const double c = std::cos(th), s = std::sin(th);
                (*grad)[static_cast<Index>(col(k, i, 0))] += dt * (ax * c + ay * s);
                (*grad)[static_cast<Index>(col(k, i, 1))] += dt * ath;
                ath += dt * v * (-ax * s + ay * c);
            }
        }
        return value;
    }

    void inequalities(const VectorXd& z, VectorXd& values, SparseJacobian* jac) {
        const ConstraintSet& cs = *spec_.constraints;
        roll(z);
        if (jac) {
            sensitivities(z);
            jac->clear(dimension());
        }
        const double da = cs.delta_a;
        Index r = 0;
        for (std::size_t k = 1; k <= N_; ++k) {
            for (std::size_t i = 0; i < n_; ++i) {
                for (std::size_t j = i + 1; j < n_; ++j) {
                    const double dx = px(k, i) - px(k, j);
                    const double dy = py(k, i) - py(k, j);
                    values[r++] = (dx * dx + dy * dy - da * da) / (2.0 * da);
                    if (jac) {
                        jac->begin_row();
                        add_position_row(*jac, k, i, dx / da, dy / da);
                        add_position_row(*jac, k, j, -dx / da, -dy / da);
                    }
                }
            }
            for (std::size_t i = 0; i < n_; ++i) {
                const double x = px(k, i), y = py(k, i);
                const double clear[4] = {x - cs.arena.x_min, cs.arena.x_max - x, y - cs.arena.y_min,
                                         cs.arena.y_max - y};
                const double gx[4] = {1.0, -1.0, 0.0, 0.0};
                const double gy[4] = {0.0, 0.0, 1.0, -1.0};
                for (int w = 0; w < 4; ++w) {
                    values[r++] = clear[w] - cs.delta_w;
                    if (jac) {
                        jac->begin_row();
                        add_position_row(*jac, k, i, gx[w], gy[w]);
                    }
                }
            }
        }
        if (jac) jac->finish();
    }

    void equalities(const VectorXd& z, VectorXd& values, SparseJacobian* jac) {
        if (jac) jac->clear(dimension());
        for (std::size_t i = 0; i < n_; ++i) {
            const std::size_t c = col(N_ - 1, i, 0);
            values[static_cast<Index>(i)] = z[static_cast<Index>(c)];
            if (jac) {
                jac->begin_row();
                jac->add(c, 1.0);
            }
        }
        if (jac) jac->finish();
    }

private:
    double& px(std::size_t k, std::size_t i) { return px_[k * n_ + i]; }
    double& py(std::size_t k, std::size_t i) { return py_[k * n_ + i]; }
    double& theta(std::size_t k, std::size_t i) { return th_[k * n_ + i]; }

    // Mirrors step_unicycle term for term so predictions agree with rollout() bitwise.
    void roll(const VectorXd& z) {
        const double dt = spec_.dt;
        for (std::size_t i = 0; i < n_; ++i) {
            px(0, i) = spec_.x0.agents[i].x;
            py(0, i) = spec_.x0.agents[i].y;
            theta(0, i) = spec_.x0.agents[i].theta;
        }
        for (std::size_t k = 0; k < N_; ++k) {
            for (std::size_t i = 0; i < n_; ++i) {
                const double v = z[static_cast<Index>(col(k, i, 0))];
                const double w = z[static_cast<Index>(col(k, i, 1))];
                const double th = theta(k, i);
                px(k + 1, i) = px(k, i) + dt * v * std::cos(th);
                py(k + 1, i) = py(k, i) + dt * v * std::sin(th);
                theta(k + 1, i) = th + dt * w;
            }
        }
    }

    // sens_[(k * n + i) * N + j]: sensitivity of agent i's position at step k to its input j.
    void sensitivities(const VectorXd& z) {
        const double dt = spec_.dt;
        sens_.assign((N_ + 1) * n_ * N_, Sensitivity{});
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t k = 0; k < N_; ++k) {
                const double th = theta(k, i);
                const double v = z[static_cast<Index>(col(k, i, 0))];
                const double c = std::cos(th), s = std::sin(th);
                for (std::size_t j = 0; j < k; ++j) {
                    Sensitivity next = sens(k, i, j);
                    next.xw -= dt * v * s * dt;
                    next.yw += dt * v * c * dt;
                    sens(k + 1, i, j) = next;
                }
                sens(k + 1, i, k) = Sensitivity{dt * c, 0.0, dt * s, 0.0};
            }
        }
    }

    Sensitivity& sens(std::size_t k, std::size_t i, std::size_t j) { return sens_[(k * n_ + i) * N_ + j]; }

    void add_position_row(SparseJacobian& jac, std::size_t k, std::size_t i, double gx, double gy) {
        for (std::size_t j = 0; j < k; ++j) {
            const Sensitivity& s = sens(k, i, j);
            jac.add(col(j, i, 0), gx * s.xv + gy * s.yv);
            jac.add(col(j, i, 1), gx * s.xw + gy * s.yw);
        }
    }

    FleetNlpSpec spec_;
    std::size_t n_;
    std::size_t N_;
    FleetConstraintLayout layout_;
    std::vector<double> px_, py_, th_;
    std::vector<double> gpx_, gpy_;
    std::vector<Sensitivity> sens_;
};

}  // namespace

NlpProblem make_fleet_problem(const FleetNlpSpec& spec) {
    // The model keeps scratch buffers; a problem instance is not meant to be
    // evaluated from two threads at once.
    auto model = std::make_shared<FleetModel>(spec);
    NlpProblem p;
    p.lower = model->lower();
    p.upper = model->upper();
    p.objective = [model](const VectorXd& z, VectorXd* grad) { return model->objective(z, grad); };
    p.num_inequalities = model->num_inequalities();
    if (p.num_inequalities > 0) {
        p.inequalities = [model](const VectorXd& z, VectorXd& v, SparseJacobian* j) {
            model->inequalities(z, v, j);
        };
    }
    p.num_equalities = model->num_equalities();
    if (p.num_equalities > 0) {
        p.equalities = [model](const VectorXd& z, VectorXd& v, SparseJacobian* j) {
            model->equalities(z, v, j);
        };
    }
    return p;
}

Eigen::VectorXd pack_inputs(std::span<const FleetInput> inputs) {
    const std::size_t n = inputs.empty() ? 0 : inputs.front().size();
    VectorXd z(static_cast<Index>(2 * n * inputs.size()));
    Index m = 0;
    for (const auto& u : inputs) {
        if (u.size() != n) throw InvalidArgument("pack_inputs: ragged fleet inputs");
        for (const auto& a : u.agents) {
            z[m++] = a.v;
            z[m++] = a.omega;
        }
    }
    return z;
}

std::vector<FleetInput> unpack_inputs(const Eigen::VectorXd& z, std::size_t agents,
                                      std::size_t horizon) {
    if (static_cast<std::size_t>(z.size()) != 2 * agents * horizon) {
        throw InvalidArgument("unpack_inputs: dimension " + std::to_string(z.size()) +
                              " does not match " + std::to_string(agents) + " agents x " +
                              std::to_string(horizon) + " steps");
    }
    std::vector<FleetInput> out(horizon, FleetInput::zeros(agents));
    Index m = 0;
    for (auto& u : out) {
        for (auto& a : u.agents) {
            a.v = z[m++];
            a.omega = z[m++];
        }
    }
    return out;
}

}  // namespace msf
