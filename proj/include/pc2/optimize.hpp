#ifndef PC2_OPTIMIZE_HPP
#define PC2_OPTIMIZE_HPP

#include <cstddef>
#include <functional>

#include <Eigen/Dense>

namespace pc2 {

/// Objective callback: returns f(x) and, when grad is non-null, writes
/// the gradient into *grad (resized by the callee).
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;

struct BfgsOptions {
    std::size_t max_iterations = 1000;
    /// Convergence on the max-norm of the gradient.
    double gradient_tolerance = 1e-8;
    /// Strong Wolfe constants (sufficient decrease, curvature).
    double armijo_c1 = 1e-4;
    double curvature_c2 = 0.9;
    std::size_t max_line_search_steps = 50;
    /// Called at the start of every iteration with the current point.
    /// Returning true signals that the objective itself changed (for
    /// example reweighted terms) and forces a re-evaluation before the
    /// next direction is computed.
    std::function<bool(std::size_t iteration, const Eigen::VectorXd& x)> before_iteration;
};

struct BfgsResult {
    Eigen::VectorXd x;
    double value = 0.0;
    double gradient_max_norm = 0.0;
    std::size_t iterations = 0;
    std::size_t function_evaluations = 0;
    bool converged = false;         ///< gradient tolerance reached
    bool hit_iteration_cap = false;
    bool line_search_stalled = false; ///< no acceptable step found
};

/// Dense BFGS with a strong Wolfe line search. The inverse Hessian
/// estimate is rescaled after the first accepted step. Throws
/// NonFiniteError when the objective is not finite at the starting point;
/// non-finite trial steps during the line search are treated as overshoot
/// and the step is shortened.
BfgsResult bfgs_minimize(const Objective& objective, Eigen::VectorXd x0,
                         const BfgsOptions& options);

} // namespace pc2

#endif
