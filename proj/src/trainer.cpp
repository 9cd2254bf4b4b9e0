#include "pc2/trainer.hpp"

#include <cmath>
#include <fstream>

#include "pc2/errors.hpp"
#include "pc2/optimize.hpp"

namespace pc2 {

void TrainingData::validate(std::size_t dims) const {
    if (points.rows() != values.size())
        throw DimensionMismatch("TrainingData: point and value counts differ");
    if (values.size() > 0 && static_cast<std::size_t>(points.cols()) != dims)
        throw DimensionMismatch("TrainingData: point dimension mismatch");
}

double LossBreakdown::penalty() const {
    double p = 0.0;
    for (std::size_t k = 0; k < inequality.size(); ++k)
        p += weight_inequality[k] * inequality[k];
    return p;
}

TrainingProblem::TrainingProblem(const MultiIndexSet& indices,
                                 const DomainScaling& scaling,
                                 const TrainingData& data,
                                 const ConstraintSet& constraints)
    : n_coeffs_(indices.size()) {
    data.validate(scaling.dims());
    if (data.size() > 0) {
        data_design_ = build_design_matrix(indices, scaling, data.points);
        targets_ = data.values;
    }

    for (const EqualityConstraint& c : constraints.equalities) {
        if (c.points.rows() == 0) continue;
        equalities_.emplace_back(c.residual, indices, scaling, c.points);
        equality_kinds_.push_back(c.kind);
        const std::size_t n = static_cast<std::size_t>(c.points.rows());
        switch (c.kind) {
        case ConstraintKind::Pde: n_pde_points_ += n; break;
        case ConstraintKind::InitialCondition: n_ic_points_ += n; break;
        case ConstraintKind::BoundaryCondition: n_bc_points_ += n; break;
        }
    }
    for (const InequalityConstraint& c : constraints.inequalities) {
        if (c.points.rows() == 0) continue;
        inequalities_.emplace_back(c.expr, indices, scaling, c.points);
    }

    if (data.size() == 0 && equalities_.empty() && inequalities_.empty())
        throw ConfigError("TrainingProblem: nothing to train on (no data, no constraints)");
}

LossBreakdown TrainingProblem::losses(const Eigen::VectorXd& coeffs) const {
    LossBreakdown b;
    if (has_data()) {
        const Eigen::VectorXd r = data_design_ * coeffs - targets_;
        b.data = r.squaredNorm() / static_cast<double>(r.size());
    }
    for (std::size_t i = 0; i < equalities_.size(); ++i) {
        const auto eval = equalities_[i].evaluate(coeffs, false);
        const double ss = eval.residuals.squaredNorm();
        switch (equality_kinds_[i]) {
        case ConstraintKind::Pde: b.pde += ss; break;
        case ConstraintKind::InitialCondition: b.ic += ss; break;
        case ConstraintKind::BoundaryCondition: b.bc += ss; break;
        }
    }
    if (n_pde_points_ > 0) b.pde /= static_cast<double>(n_pde_points_);
    if (n_ic_points_ > 0) b.ic /= static_cast<double>(n_ic_points_);
    if (n_bc_points_ > 0) b.bc /= static_cast<double>(n_bc_points_);
    for (const CompiledResidual& c : inequalities_) {
        const auto eval = c.evaluate(coeffs, false);
        double ss = 0.0;
        for (Eigen::Index i = 0; i < eval.residuals.size(); ++i) {
            const double h = hinge(eval.residuals[i]);
            ss += h * h;
        }
        b.inequality.push_back(ss / static_cast<double>(c.n_points()));
    }
    b.weight_inequality.assign(b.inequality.size(), 0.0);
    return b;
}

void TrainingProblem::assign_weights(LossBreakdown& b, const TrainOptions& opt) const {
    const bool want_data = has_data();
    const bool want_pde = n_pde_points_ > 0;
    const bool want_ic = n_ic_points_ > 0;
    const bool want_bc = n_bc_points_ > 0;

    // Penalty factors are user-set constants, never rebalanced; only the
    // continuation loop in train() scales them (through the options).
    b.weight_inequality.assign(b.inequality.size(), opt.weight_inequality);

    if (!opt.adaptive_weights) {
        b.weight_data = want_data ? opt.weight_data : 0.0;
        b.weight_pde = want_pde ? opt.weight_pde : 0.0;
        b.weight_ic = want_ic ? opt.weight_ic : 0.0;
        b.weight_bc = want_bc ? opt.weight_bc : 0.0;
    } else {
        double sum = 0.0;
        std::size_t terms = 0;
        if (want_data) { sum += b.data; ++terms; }
        if (want_pde) { sum += b.pde; ++terms; }
        if (want_ic) { sum += b.ic; ++terms; }
        if (want_bc) { sum += b.bc; ++terms; }

        if (sum <= 0.0) {
            // Every loss already vanished; keep the objective defined.
            const double w = terms > 0 ? 1.0 / static_cast<double>(terms) : 0.0;
            b.weight_data = want_data ? w : 0.0;
            b.weight_pde = want_pde ? w : 0.0;
            b.weight_ic = want_ic ? w : 0.0;
            b.weight_bc = want_bc ? w : 0.0;
        } else {
            b.weight_data = want_data ? b.data / sum : 0.0;
            b.weight_pde = want_pde ? b.pde / sum : 0.0;
            b.weight_ic = want_ic ? b.ic / sum : 0.0;
            b.weight_bc = want_bc ? b.bc / sum : 0.0;
        }
    }

    b.total = b.weight_data * b.data + b.weight_pde * b.pde +
              b.weight_ic * b.ic + b.weight_bc * b.bc + b.penalty();
}

double TrainingProblem::objective(const Eigen::VectorXd& coeffs,
                                  const LossBreakdown& weights,
                                  Eigen::VectorXd* grad) const {
    if (grad) {
        grad->resize(static_cast<Eigen::Index>(n_coeffs_));
        grad->setZero();
    }

    double f = 0.0;
    if (has_data()) {
        const Eigen::VectorXd r = data_design_ * coeffs - targets_;
        const double n = static_cast<double>(r.size());
        f += weights.weight_data * r.squaredNorm() / n;
        if (grad)
            grad->noalias() +=
                (2.0 * weights.weight_data / n) * (data_design_.transpose() * r);
    }

    for (std::size_t i = 0; i < equalities_.size(); ++i) {
        double w = 0.0, n = 0.0;
        switch (equality_kinds_[i]) {
        case ConstraintKind::Pde:
            w = weights.weight_pde; n = static_cast<double>(n_pde_points_); break;
        case ConstraintKind::InitialCondition:
            w = weights.weight_ic; n = static_cast<double>(n_ic_points_); break;
        case ConstraintKind::BoundaryCondition:
            w = weights.weight_bc; n = static_cast<double>(n_bc_points_); break;
        }
        const auto eval = equalities_[i].evaluate(coeffs, grad != nullptr);
        f += w * eval.residuals.squaredNorm() / n;
        if (grad)
            equalities_[i].accumulate_jacobian_transpose(
                eval, (2.0 * w / n) * eval.residuals, *grad);
    }

    for (std::size_t k = 0; k < inequalities_.size(); ++k) {
        const CompiledResidual& c = inequalities_[k];
        const double w = weights.weight_inequality[k];
        const double n = static_cast<double>(c.n_points());
        const auto eval = c.evaluate(coeffs, grad != nullptr);
        Eigen::VectorXd h(eval.residuals.size());
        for (Eigen::Index i = 0; i < h.size(); ++i)
            h[i] = hinge(eval.residuals[i]);
        f += w * h.squaredNorm() / n;
        // d(hinge(v)^2)/dv = 2 hinge(v), zero on the feasible side.
        if (grad)
            c.accumulate_jacobian_transpose(eval, (2.0 * w / n) * h, *grad);
    }
    return f;
}

double TrainingProblem::max_violation(const Eigen::VectorXd& coeffs) const {
    double worst = 0.0;
    for (const CompiledResidual& c : inequalities_) {
        const auto eval = c.evaluate(coeffs, false);
        for (Eigen::Index i = 0; i < eval.residuals.size(); ++i)
            worst = std::max(worst, -hinge(eval.residuals[i]));
    }
    return worst;
}

Eigen::VectorXd TrainingProblem::data_least_squares() const {
    if (!has_data()) throw Error("data_least_squares: no training data");
    return ols_solve(data_design_, targets_);
}

TrainingProblem TrainingProblem::subset(std::span<const std::size_t> columns) const {
    TrainingProblem out;
    out.n_coeffs_ = columns.size();
    out.targets_ = targets_;
    if (targets_.size() > 0) {
        out.data_design_.resize(data_design_.rows(),
                                static_cast<Eigen::Index>(columns.size()));
        for (std::size_t k = 0; k < columns.size(); ++k) {
            if (columns[k] >= n_coeffs_)
                throw DimensionMismatch("TrainingProblem::subset: column out of range");
            out.data_design_.col(static_cast<Eigen::Index>(k)) =
                data_design_.col(static_cast<Eigen::Index>(columns[k]));
        }
    }
    for (const CompiledResidual& c : equalities_)
        out.equalities_.push_back(c.subset_columns(columns));
    out.equality_kinds_ = equality_kinds_;
    for (const CompiledResidual& c : inequalities_)
        out.inequalities_.push_back(c.subset_columns(columns));
    out.n_pde_points_ = n_pde_points_;
    out.n_ic_points_ = n_ic_points_;
    out.n_bc_points_ = n_bc_points_;
    return out;
}

TrainResult train(const MultiIndexSet& indices, const DomainScaling& scaling,
                  const TrainingData& data, const ConstraintSet& constraints,
                  const TrainOptions& options) {
    const TrainingProblem problem(indices, scaling, data, constraints);
    return train(problem, indices, scaling, options);
}

TrainResult train(const TrainingProblem& problem, const MultiIndexSet& indices,
                  const DomainScaling& scaling, const TrainOptions& options) {
    const std::size_t p = problem.n_coefficients();
    if (indices.size() != p)
        throw DimensionMismatch("train: index set does not match problem width");

    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
    if (options.warm_start_least_squares && problem.has_data()) {
        if (static_cast<std::size_t>(problem.data_targets().size()) >= p) {
            try {
                x0 = problem.data_least_squares();
            } catch (const RankDeficient&) {
                x0.setZero();
            }
        } else {
            // Fewer observations than coefficients: start from the
            // minimum-norm interpolant. It is the tamest point on the
            // data-optimal manifold, which keeps the optimizer from
            // drifting to huge-norm solutions along flat directions.
            x0 = problem.data_design()
                     .completeOrthogonalDecomposition()
                     .solve(problem.data_targets());
        }
    }

    // The effective options carry the continuation-scaled penalty factor;
    // everything else stays as configured.
    TrainOptions eff = options;

    std::ofstream log;
    if (!options.iteration_log_path.empty()) {
        log.open(options.iteration_log_path);
        if (!log)
            throw IoError("train: cannot open iteration log " + options.iteration_log_path);
        if (!options.iteration_log_comment.empty())
            log << "# " << options.iteration_log_comment << "\n";
        log << "iteration,data,pde,ic,bc,penalty,total\n";
    }
    std::size_t iter_offset = 0;
    const auto log_row = [&](std::size_t iter, const LossBreakdown& b) {
        if (!log.is_open()) return;
        double pen = 0.0;
        for (double v : b.inequality) pen += v;
        log << iter << ',' << b.data << ',' << b.pde << ',' << b.ic << ','
            << b.bc << ',' << pen << ',' << b.total << '\n';
    };

    LossBreakdown frozen;

    BfgsOptions bopt;
    bopt.gradient_tolerance = options.gradient_tolerance;
    bopt.max_iterations =
        options.max_iterations > 0 ? options.max_iterations : 50 * p;
    bopt.before_iteration = [&](std::size_t iter, const Eigen::VectorXd& x) {
        // Refreshing the weights changes the objective between
        // iterations; they stay frozen inside each line search so the
        // gradients remain exact.
        LossBreakdown b = problem.losses(x);
        problem.assign_weights(b, eff);
        log_row(iter_offset + iter, b);
        const bool changed =
            options.adaptive_weights &&
            (b.weight_data != frozen.weight_data ||
             b.weight_pde != frozen.weight_pde || b.weight_ic != frozen.weight_ic ||
             b.weight_bc != frozen.weight_bc);
        frozen = b;
        return changed;
    };

    const Objective objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
        return problem.objective(x, frozen, grad);
    };

    BfgsResult opt;
    std::size_t rounds_used = 0;
    std::size_t total_iterations = 0, total_evaluations = 0;
    for (;;) {
        frozen = problem.losses(x0);
        problem.assign_weights(frozen, eff);
        opt = bfgs_minimize(objective, std::move(x0), bopt);
        total_iterations += opt.iterations;
        total_evaluations += opt.function_evaluations;
        iter_offset += opt.iterations;
        if (!problem.has_inequalities() || rounds_used >= options.penalty_rounds ||
            problem.max_violation(opt.x) <= options.violation_tolerance)
            break;
        ++rounds_used;
        eff.weight_inequality *= options.penalty_growth;
        x0 = std::move(opt.x);
    }

    TrainResult result;
    result.model.scaling = scaling;
    result.model.indices = indices;
    result.model.coefficients = std::move(opt.x);
    result.losses = problem.losses(result.model.coefficients);
    problem.assign_weights(result.losses, eff);
    log_row(iter_offset, result.losses);
    result.iterations = total_iterations;
    result.function_evaluations = total_evaluations;
    result.converged = opt.converged;
    result.hit_iteration_cap = opt.hit_iteration_cap;
    result.line_search_stalled = opt.line_search_stalled;
    result.penalty_rounds_used = rounds_used;
    if (!result.model.coefficients.allFinite())
        throw NonFiniteError("train: non-finite coefficients after optimization");
    return result;
}

LossBreakdown compute_losses(const SurrogateModel& model, const TrainingData& data,
                             const ConstraintSet& constraints,
                             const TrainOptions& options) {
    model.validate();
    const TrainingProblem problem(model.indices, model.scaling, data, constraints);
    LossBreakdown b = problem.losses(model.coefficients);
    problem.assign_weights(b, options);
    return b;
}

} // namespace pc2
