#include "pc2/optimize.hpp"

#include <cmath>
#include <limits>

#include "pc2/errors.hpp"

namespace pc2 {

namespace {

struct LinePoint {
    double alpha;
    double value;
    double slope;
    bool finite;
};

class LineSearch {
public:
    LineSearch(const Objective& objective, const Eigen::VectorXd& x,
               const Eigen::VectorXd& direction, double f0, double slope0,
               const BfgsOptions& opt)
        : objective_(objective), x_(x), d_(direction), f0_(f0), slope0_(slope0),
          opt_(opt) {}

    /// Strong Wolfe search (bracket then zoom). Returns the accepted step
    /// with its value/gradient, or alpha = 0 when no step was accepted.
    LinePoint run(Eigen::VectorXd& grad_out, std::size_t& evals) {
        LinePoint prev{0.0, f0_, slope0_, true};
        double alpha = 1.0;
        double alpha_max = 1e4;
        for (std::size_t i = 0; i < opt_.max_line_search_steps; ++i) {
            LinePoint cur = probe(alpha, evals);
            if (!cur.finite) {
                // Overshot into non-finite territory: confine the search.
                alpha_max = alpha;
                alpha = 0.5 * (prev.alpha + alpha);
                continue;
            }
            if (cur.value > f0_ + opt_.armijo_c1 * alpha * slope0_ ||
                (i > 0 && cur.value >= prev.value))
                return zoom(prev, cur, grad_out, evals);
            if (std::abs(cur.slope) <= -opt_.curvature_c2 * slope0_) {
                grad_out = last_grad_;
                return cur;
            }
            if (cur.slope >= 0.0) return zoom(cur, prev, grad_out, evals);
            prev = cur;
            alpha = std::min(2.0 * alpha, alpha_max);
            if (alpha >= alpha_max && prev.alpha >= alpha_max) break;
        }
        return {0.0, f0_, slope0_, true};
    }

private:
    const Objective& objective_;
    const Eigen::VectorXd& x_;
    const Eigen::VectorXd& d_;
    double f0_, slope0_;
    const BfgsOptions& opt_;
    Eigen::VectorXd last_grad_;

    LinePoint probe(double alpha, std::size_t& evals) {
        ++evals;
        const Eigen::VectorXd xt = x_ + alpha * d_;
        const double f = objective_(xt, &last_grad_);
        if (!std::isfinite(f) || !last_grad_.allFinite())
            return {alpha, std::numeric_limits<double>::infinity(), 0.0, false};
        return {alpha, f, last_grad_.dot(d_), true};
    }

    LinePoint zoom(LinePoint lo, LinePoint hi, Eigen::VectorXd& grad_out,
                   std::size_t& evals) {
        for (std::size_t i = 0; i < opt_.max_line_search_steps; ++i) {
            // Bisection is slower than interpolation but unconditionally
            // safe; the quadratic objectives here converge in a few steps
            // either way.
            const double alpha = 0.5 * (lo.alpha + hi.alpha);
            LinePoint cur = probe(alpha, evals);
            if (!cur.finite ||
                cur.value > f0_ + opt_.armijo_c1 * alpha * slope0_ ||
                cur.value >= lo.value) {
                hi = cur.finite ? cur : LinePoint{alpha, lo.value, 0.0, true};
                hi.alpha = alpha;
            } else {
                if (std::abs(cur.slope) <= -opt_.curvature_c2 * slope0_) {
                    grad_out = last_grad_;
                    return cur;
                }
                if (cur.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
                lo = cur;
            }
            if (std::abs(hi.alpha - lo.alpha) <
                1e-14 * std::max(1.0, std::abs(lo.alpha)))
                break;
        }
        if (lo.alpha > 0.0 && lo.value < f0_) {
            // Wolfe curvature never certified; accept the decrease anyway.
            LinePoint cur = probe(lo.alpha, evals);
            if (cur.finite) {
                grad_out = last_grad_;
                return cur;
            }
        }
        return {0.0, f0_, slope0_, true};
    }
};

} // namespace

BfgsResult bfgs_minimize(const Objective& objective, Eigen::VectorXd x0,
                         const BfgsOptions& options) {
    const Eigen::Index n = x0.size();
    BfgsResult result;
    result.x = std::move(x0);

    Eigen::VectorXd grad(n);
    double f = objective(result.x, &grad);
    ++result.function_evaluations;
    if (!std::isfinite(f) || !grad.allFinite())
        throw NonFiniteError("bfgs_minimize: objective not finite at the starting point");

    Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
    bool h_is_fresh = true;

    for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
        if (options.before_iteration &&
            options.before_iteration(iter, result.x)) {
            f = objective(result.x, &grad);
            ++result.function_evaluations;
            if (!std::isfinite(f) || !grad.allFinite())
                throw NonFiniteError("bfgs_minimize: objective became non-finite after reweighting");
        }

        result.gradient_max_norm = grad.lpNorm<Eigen::Infinity>();
        if (result.gradient_max_norm <= options.gradient_tolerance) {
            result.converged = true;
            break;
        }

        Eigen::VectorXd d = -(H * grad);
        double slope = d.dot(grad);
        if (slope >= 0.0) {
            // Stale curvature (objective reweighted or update skipped):
            // fall back to steepest descent.
            H.setIdentity();
            h_is_fresh = true;
            d = -grad;
            slope = d.dot(grad);
        }

        LineSearch search(objective, result.x, d, f, slope, options);
        Eigen::VectorXd grad_next;
        const LinePoint step = search.run(grad_next, result.function_evaluations);
        ++result.iterations;
        if (step.alpha == 0.0) {
            result.line_search_stalled = true;
            break;
        }

        const Eigen::VectorXd s = step.alpha * d;
        const Eigen::VectorXd y = grad_next - grad;
        result.x += s;
        f = step.value;
        grad = grad_next;

        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            if (h_is_fresh) {
                H *= sy / y.squaredNorm();
                h_is_fresh = false;
            }
            const Eigen::VectorXd Hy = H * y;
            const double rho = 1.0 / sy;
            // BFGS inverse update, expanded to rank-two form.
            H.noalias() -= rho * (Hy * s.transpose() + s * Hy.transpose());
            H.noalias() += (rho * rho * y.dot(Hy) + rho) * (s * s.transpose());
        }
    }

    result.gradient_max_norm = grad.lpNorm<Eigen::Infinity>();
    if (!result.converged &&
        result.gradient_max_norm <= options.gradient_tolerance)
        result.converged = true;
    result.hit_iteration_cap =
        !result.converged && !result.line_search_stalled &&
        result.iterations >= options.max_iterations;
    result.value = f;
    return result;
}

} // namespace pc2
