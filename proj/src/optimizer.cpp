#include "msf/optimizer.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>

#include "msf/errors.hpp"

namespace msf {

void SparseJacobian::clear(std::size_t cols) {
    num_cols_ = cols;
    row_start_.clear();
    cols_.clear();
    vals_.clear();
}

void SparseJacobian::axpy_row(std::size_t r, double weight, Eigen::VectorXd& out) const {
    for (std::size_t k = row_start_[r]; k < row_start_[r + 1]; ++k) {
        out[static_cast<Eigen::Index>(cols_[k])] += weight * vals_[k];
    }
}

Eigen::VectorXd SparseJacobian::dense_row(std::size_t r) const {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_cols_));
    axpy_row(r, 1.0, row);
    return row;
}

std::string_view to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::FeasibleSuboptimal: return "feasible-suboptimal";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::IterationLimit: return "iteration-limit";
    }
    return "unknown";
}

void SolverConfig::validate() const {
    if (!(feas_tol > 0.0) || !(stat_tol > 0.0) || max_outer_iterations <= 0 ||
        max_inner_iterations <= 0 || !(initial_penalty > 0.0) || !(penalty_growth > 1.0) ||
        !(max_penalty >= initial_penalty) || !(multiplier_bound > 0.0) || lbfgs_memory <= 0) {
        throw InvalidArgument("solver config: tolerances/iterations must be positive, growth > 1");
    }
}

namespace {

using Eigen::VectorXd;

VectorXd project(const VectorXd& z, const VectorXd& lo, const VectorXd& hi) {
    return z.cwiseMax(lo).cwiseMin(hi);
}

double projected_gradient_norm(const VectorXd& z, const VectorXd& g, const VectorXd& lo,
                               const VectorXd& hi) {
    if (z.size() == 0) return 0.0;
    return (project(z - g, lo, hi) - z).lpNorm<Eigen::Infinity>();
}

struct Evaluation {
    double f = 0.0;
    VectorXd ineq;
    VectorXd eq;
};

Evaluation evaluate_plain(const NlpProblem& p, const VectorXd& z) {
    Evaluation e;
    e.f = p.objective(z, nullptr);
    e.ineq = VectorXd::Zero(static_cast<Eigen::Index>(p.num_inequalities));
    e.eq = VectorXd::Zero(static_cast<Eigen::Index>(p.num_equalities));
    if (p.num_inequalities > 0) p.inequalities(z, e.ineq, nullptr);
    if (p.num_equalities > 0) p.equalities(z, e.eq, nullptr);
    return e;
}

Violation violation_of(const Evaluation& e) {
    Violation v;
    if (e.ineq.size() > 0) v.inequality = std::max(0.0, -e.ineq.minCoeff());
    if (e.eq.size() > 0) v.equality = e.eq.cwiseAbs().maxCoeff();
    return v;
}

bool all_finite(const Evaluation& e) {
    return std::isfinite(e.f) && e.ineq.allFinite() && e.eq.allFinite();
}

/// Powell-Hestenes-Rockafellar augmented Lagrangian for fixed multipliers.
class AugmentedLagrangian {
public:
    AugmentedLagrangian(const NlpProblem& p, const VectorXd& lambda, const VectorXd& nu, double mu)
        : p_(p), lambda_(lambda), nu_(nu), mu_(mu) {
        g_.resize(static_cast<Eigen::Index>(p.num_inequalities));
        h_.resize(static_cast<Eigen::Index>(p.num_equalities));
    }

    double operator()(const VectorXd& z, VectorXd& grad) {
        grad.resize(z.size());
        double value = p_.objective(z, &grad);
        if (p_.num_inequalities > 0) {
            p_.inequalities(z, g_, &jg_);
            for (Eigen::Index i = 0; i < g_.size(); ++i) {
                const double shifted = lambda_[i] - mu_ * g_[i];
                if (shifted > 0.0) {
                    value += (shifted * shifted - lambda_[i] * lambda_[i]) / (2.0 * mu_);
                    jg_.axpy_row(static_cast<std::size_t>(i), -shifted, grad);
                } else {
                    value -= lambda_[i] * lambda_[i] / (2.0 * mu_);
                }
            }
        }
        if (p_.num_equalities > 0) {
            p_.equalities(z, h_, &jh_);
            for (Eigen::Index j = 0; j < h_.size(); ++j) {
                value += nu_[j] * h_[j] + 0.5 * mu_ * h_[j] * h_[j];
                jh_.axpy_row(static_cast<std::size_t>(j), nu_[j] + mu_ * h_[j], grad);
            }
        }
        return value;
    }

private:
    const NlpProblem& p_;
    const VectorXd& lambda_;
    const VectorXd& nu_;
    double mu_;
    VectorXd g_;
    VectorXd h_;
    SparseJacobian jg_;
    SparseJacobian jh_;
};

struct InnerResult {
    int iterations = 0;
    double projected_gradient = 0.0;
};

/// Projected L-BFGS: quasi-Newton step on the free variables, Armijo search
/// along the projection arc, steepest descent when the step is not a descent.
template <typename Fn>
InnerResult minimize_on_box(Fn& fn, VectorXd& z, const VectorXd& lo, const VectorXd& hi,
                            double tol, int max_iterations, int memory) {
    struct Pair {
        VectorXd s, y;
        double rho;
    };
    std::deque<Pair> history;
    VectorXd grad;
    double f = fn(z, grad);
    InnerResult out;
    int flat_steps = 0;

    for (; out.iterations < max_iterations; ++out.iterations) {
        out.projected_gradient = projected_gradient_norm(z, grad, lo, hi);
        if (out.projected_gradient <= tol) return out;

        VectorXd free_mask = VectorXd::Ones(z.size());
        for (Eigen::Index i = 0; i < z.size(); ++i) {
            if ((z[i] <= lo[i] && grad[i] > 0.0) || (z[i] >= hi[i] && grad[i] < 0.0)) {
                free_mask[i] = 0.0;
            }
        }

        const auto quasi_newton = [&]() {
            VectorXd q = grad.cwiseProduct(free_mask);
            std::vector<double> alpha(history.size());
            for (std::size_t k = history.size(); k-- > 0;) {
                alpha[k] = history[k].rho * history[k].s.dot(q);
                q -= alpha[k] * history[k].y.cwiseProduct(free_mask);
            }
            if (!history.empty()) {
                const auto& last = history.back();
                q *= last.s.dot(last.y) / last.y.squaredNorm();
            }
            for (std::size_t k = 0; k < history.size(); ++k) {
                const double beta = history[k].rho * history[k].y.cwiseProduct(free_mask).dot(q);
                q += (alpha[k] - beta) * history[k].s.cwiseProduct(free_mask);
            }
            return VectorXd(-q.cwiseProduct(free_mask));
        };

        bool accepted = false;
        VectorXd z_new, g_new;
        double f_new = f;
        for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
            const bool steepest = attempt == 1 || history.empty();
            VectorXd d = steepest ? VectorXd(-grad.cwiseProduct(free_mask)) : quasi_newton();
            if (!steepest && grad.dot(d) >= 0.0) {
                d = -grad.cwiseProduct(free_mask);
            }
            double step = 1.0;
            if (history.empty()) {
                const double gmax = d.lpNorm<Eigen::Infinity>();
                if (gmax > 1.0) step = 1.0 / gmax;
            }
            for (int ls = 0; ls < 50; ++ls, step *= 0.5) {
                z_new = project(z + step * d, lo, hi);
                f_new = fn(z_new, g_new);
                if (std::isfinite(f_new) && f_new <= f + 1e-4 * grad.dot(z_new - z)) {
                    accepted = true;
                    break;
                }
            }
            if (!accepted) history.clear();
            if (steepest) break;
        }
        if (!accepted) {
            out.projected_gradient = projected_gradient_norm(z, grad, lo, hi);
            return out;
        }

        VectorXd s = z_new - z;
        VectorXd y = g_new - grad;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm() && sy > 0.0) {
            history.push_back({std::move(s), std::move(y), 1.0 / sy});
            if (static_cast<int>(history.size()) > memory) history.pop_front();
        }
        flat_steps = (std::abs(f - f_new) <= 1e-15 * (1.0 + std::abs(f))) ? flat_steps + 1 : 0;
        z = std::move(z_new);
        grad = std::move(g_new);
        f = f_new;
        if (flat_steps >= 3) {
            ++out.iterations;
            break;
        }
    }
    out.projected_gradient = projected_gradient_norm(z, grad, lo, hi);
    return out;
}

struct Candidate {
    VectorXd z;
    double objective = 0.0;
    Violation violation;
    double stationarity = std::numeric_limits<double>::infinity();
};

bool better(const Candidate& a, const Candidate& b, double feas_tol) {
    const bool fa = a.violation.max() <= feas_tol;
    const bool fb = b.violation.max() <= feas_tol;
    if (fa && fb) return a.objective < b.objective;
    if (fa != fb) return fa;
    return a.violation.max() < b.violation.max();
}

}  // namespace

Violation constraint_violation(const NlpProblem& p, const Eigen::VectorXd& z) {
    return violation_of(evaluate_plain(p, z));
}

SolveResult solve(const NlpProblem& p, const std::optional<Eigen::VectorXd>& warm_start,
                  const SolverConfig& cfg) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const auto n = static_cast<Eigen::Index>(p.dimension());
    if (p.upper.size() != n || (p.lower.array() > p.upper.array()).any()) {
        throw InvalidProblem("solve: inconsistent box bounds");
    }
    if (!p.objective) throw InvalidProblem("solve: missing objective");

    VectorXd z;
    if (warm_start) {
        if (warm_start->size() != n) throw InvalidProblem("solve: warm start has wrong dimension");
        z = project(*warm_start, p.lower, p.upper);
    } else {
        z = project(VectorXd::Zero(n), p.lower, p.upper);
    }

    const Evaluation start = evaluate_plain(p, z);
    if (!all_finite(start)) {
        throw InvalidProblem("solve: non-finite objective or constraint at the start point");
    }
    std::optional<Candidate> warm_candidate;
    if (warm_start) warm_candidate = Candidate{z, start.f, violation_of(start)};

    VectorXd lambda = VectorXd::Zero(static_cast<Eigen::Index>(p.num_inequalities));
    VectorXd nu = VectorXd::Zero(static_cast<Eigen::Index>(p.num_equalities));
    double mu = cfg.initial_penalty;
    double previous_violation = violation_of(start).max();
    int stuck_at_max = 0;

    SolveResult result;
    Candidate best{z, start.f, violation_of(start)};
    bool optimal = false;
    bool infeasible = false;

    for (int outer = 0; outer < cfg.max_outer_iterations; ++outer) {
        AugmentedLagrangian al(p, lambda, nu, mu);
        const InnerResult inner = minimize_on_box(al, z, p.lower, p.upper, cfg.stat_tol,
                                                  cfg.max_inner_iterations, cfg.lbfgs_memory);
        result.inner_iterations += inner.iterations;
        result.outer_iterations = outer + 1;

        const Evaluation e = evaluate_plain(p, z);
        if (!all_finite(e)) break;
        const Violation viol = violation_of(e);

        // First-order multiplier update; the inner projected gradient is then the
        // projected Lagrangian gradient at the updated multipliers.
        for (Eigen::Index i = 0; i < lambda.size(); ++i) {
            lambda[i] = std::clamp(lambda[i] - mu * e.ineq[i], 0.0, cfg.multiplier_bound);
        }
        for (Eigen::Index j = 0; j < nu.size(); ++j) {
            nu[j] = std::clamp(nu[j] + mu * e.eq[j], -cfg.multiplier_bound, cfg.multiplier_bound);
        }

        Candidate current{z, e.f, viol, inner.projected_gradient};
        if (viol.max() <= cfg.feas_tol && inner.projected_gradient <= cfg.stat_tol) {
            best = current;
            optimal = true;
            break;
        }
        if (better(current, best, cfg.feas_tol) ||
            (current.violation.max() <= cfg.feas_tol && best.violation.max() <= cfg.feas_tol &&
             current.objective <= best.objective)) {
            best = current;
        }

        if (viol.max() > cfg.feas_tol && viol.max() > 0.25 * previous_violation) {
            if (mu >= cfg.max_penalty) {
                if (++stuck_at_max >= 2) {
                    infeasible = true;
                    break;
                }
            }
            mu = std::min(mu * cfg.penalty_growth, cfg.max_penalty);
        }
        previous_violation = viol.max();
    }

    if (optimal) {
        result.status = SolveStatus::Optimal;
    } else if (best.violation.max() <= cfg.feas_tol) {
        result.status = SolveStatus::FeasibleSuboptimal;
    } else if (infeasible) {
        result.status = SolveStatus::Infeasible;
    } else {
        result.status = SolveStatus::IterationLimit;
    }

    if (warm_candidate && warm_candidate->violation.max() <= cfg.feas_tol &&
        warm_candidate->objective < best.objective) {
        best = *warm_candidate;
        best.stationarity = std::numeric_limits<double>::quiet_NaN();
        result.status = SolveStatus::FeasibleSuboptimal;
    }

    result.z = best.z;
    result.objective = best.objective;
    result.max_inequality_violation = best.violation.inequality;
    result.max_equality_violation = best.violation.equality;
    result.stationarity = best.stationarity;
    result.wall_clock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

double gradient_check(const NlpProblem& p, const Eigen::VectorXd& z, double h) {
    if (!(h > 0.0)) throw InvalidArgument("gradient_check: step must be positive");
    const auto n = static_cast<Eigen::Index>(p.dimension());
    const auto mi = static_cast<Eigen::Index>(p.num_inequalities);
    const auto me = static_cast<Eigen::Index>(p.num_equalities);

    VectorXd grad(n);
    p.objective(z, &grad);
    VectorXd g(mi), hv(me);
    SparseJacobian jg, jh;
    if (mi > 0) p.inequalities(z, g, &jg);
    if (me > 0) p.equalities(z, hv, &jh);

    Eigen::MatrixXd fd_obj(1, n), fd_g(mi, n), fd_h(me, n);
    VectorXd gp(mi), gm(mi), hp(me), hm(me);
    for (Eigen::Index k = 0; k < n; ++k) {
        VectorXd zp = z, zm = z;
        zp[k] += h;
        zm[k] -= h;
        fd_obj(0, k) = (p.objective(zp, nullptr) - p.objective(zm, nullptr)) / (2.0 * h);
        if (mi > 0) {
            p.inequalities(zp, gp, nullptr);
            p.inequalities(zm, gm, nullptr);
            fd_g.col(k) = (gp - gm) / (2.0 * h);
        }
        if (me > 0) {
            p.equalities(zp, hp, nullptr);
            p.equalities(zm, hm, nullptr);
            fd_h.col(k) = (hp - hm) / (2.0 * h);
        }
    }

    const auto rel = [](const VectorXd& analytic, const VectorXd& numeric) {
        if (analytic.size() == 0) return 0.0;
        const double scale = std::max(1.0, numeric.lpNorm<Eigen::Infinity>());
        return (analytic - numeric).lpNorm<Eigen::Infinity>() / scale;
    };
    double worst = rel(grad, fd_obj.row(0).transpose());
    for (Eigen::Index r = 0; r < mi; ++r) {
        worst = std::max(worst, rel(jg.dense_row(static_cast<std::size_t>(r)), fd_g.row(r).transpose()));
    }
    for (Eigen::Index r = 0; r < me; ++r) {
        worst = std::max(worst, rel(jh.dense_row(static_cast<std::size_t>(r)), fd_h.row(r).transpose()));
    }
    return worst;
}

}  // namespace msf
