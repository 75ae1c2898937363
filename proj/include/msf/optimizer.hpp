#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

namespace msf {

/// Row-compressed constraint Jacobian. Rows are appended in residual order.
class SparseJacobian {
public:
    void clear(std::size_t cols);
    void begin_row() { row_start_.push_back(cols_.size()); }
    void add(std::size_t col, double value) {
        cols_.push_back(col);
        vals_.push_back(value);
    }
    /// Finalizes the row structure; call once after the last row.
    void finish() { row_start_.push_back(cols_.size()); }

    std::size_t rows() const { return row_start_.empty() ? 0 : row_start_.size() - 1; }
    std::size_t cols() const { return num_cols_; }

    /// out += weight * row(r)
    void axpy_row(std::size_t r, double weight, Eigen::VectorXd& out) const;
    Eigen::VectorXd dense_row(std::size_t r) const;

private:
    std::size_t num_cols_ = 0;
    std::vector<std::size_t> row_start_;
    std::vector<std::size_t> cols_;
    std::vector<double> vals_;
};

using ObjectiveFn = std::function<double(const Eigen::VectorXd& z, Eigen::VectorXd* grad)>;
/// Fills `values` (pre-sized by the caller) and, if non-null, the Jacobian.
using ResidualFn =
    std::function<void(const Eigen::VectorXd& z, Eigen::VectorXd& values, SparseJacobian* jac)>;

/// min f(z) s.t. g(z) >= 0, h(z) = 0, lower <= z <= upper.
struct NlpProblem {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    ObjectiveFn objective;
    std::size_t num_inequalities = 0;
    ResidualFn inequalities;
    std::size_t num_equalities = 0;
    ResidualFn equalities;

    std::size_t dimension() const { return static_cast<std::size_t>(lower.size()); }
};

enum class SolveStatus { Optimal, FeasibleSuboptimal, Infeasible, IterationLimit };

std::string_view to_string(SolveStatus s);

struct SolverConfig {
    double feas_tol = 1e-6;
    double stat_tol = 1e-4;
    int max_outer_iterations = 30;
    int max_inner_iterations = 200;
    double initial_penalty = 10.0;
    double penalty_growth = 10.0;
    double max_penalty = 1e10;
    double multiplier_bound = 1e10;
    int lbfgs_memory = 8;

    void validate() const;
};

struct SolveResult {
    Eigen::VectorXd z;
    SolveStatus status = SolveStatus::IterationLimit;
    double objective = 0.0;
    double max_inequality_violation = 0.0;
    double max_equality_violation = 0.0;
    double stationarity = 0.0;
    int outer_iterations = 0;
    int inner_iterations = 0;
    double wall_clock_s = 0.0;
};

/// Augmented-Lagrangian outer loop; projected L-BFGS over the box inside.
/// The warm start is clipped to the box. Throws InvalidProblem if the problem
/// cannot be evaluated (non-finite) at the start point.
SolveResult solve(const NlpProblem& p, const std::optional<Eigen::VectorXd>& warm_start,
                  const SolverConfig& cfg = {});

/// Largest mixed relative error |analytic - central FD| / max(1, |FD|_inf) over
/// the objective gradient and every constraint row.
double gradient_check(const NlpProblem& p, const Eigen::VectorXd& z, double h);

/// Max violation of g >= 0 and h = 0 at z (evaluated through the problem callables).
struct Violation {
    double inequality = 0.0;
    double equality = 0.0;
    double max() const { return inequality > equality ? inequality : equality; }
};
Violation constraint_violation(const NlpProblem& p, const Eigen::VectorXd& z);

}  // namespace msf
