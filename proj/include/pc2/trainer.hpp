#ifndef PC2_TRAINER_HPP
#define PC2_TRAINER_HPP

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pc2/constraints.hpp"
#include "pc2/surrogate.hpp"

namespace pc2 {

/// Labelled training observations; points are rows in physical units.
/// May be empty: the surrogate can be trained from constraints alone.
struct TrainingData {
    Eigen::MatrixXd points;
    Eigen::VectorXd values;

    std::size_t size() const { return static_cast<std::size_t>(values.size()); }
    void validate(std::size_t dims) const;
};

/// Mean squared residuals per loss kind (unweighted) together with the
/// weights that combined them into the total.
struct LossBreakdown {
    double data = 0.0;
    double pde = 0.0;
    double ic = 0.0;
    double bc = 0.0;
    std::vector<double> inequality; ///< per inequality constraint, mean hinge^2

    double weight_data = 0.0;
    double weight_pde = 0.0;
    double weight_ic = 0.0;
    double weight_bc = 0.0;
    std::vector<double> weight_inequality;

    double total = 0.0; ///< weighted sum of every present term

    /// Weighted inequality contribution to the total.
    double penalty() const;
};

struct TrainOptions {
    /// Rebalance the data/PDE/IC/BC weights every iteration (each weight
    /// proportional to its current loss). When off, the fixed weights
    /// below apply. Inequality penalty factors are never adaptive.
    bool adaptive_weights = true;
    double weight_data = 1.0;
    double weight_pde = 1.0;
    double weight_ic = 1.0;
    double weight_bc = 1.0;
    double weight_inequality = 1.0;

    /// Geometric penalty continuation: after the optimizer finishes, if
    /// the worst inequality violation at the collocation points exceeds
    /// violation_tolerance, multiply the penalty factor by penalty_growth
    /// and re-train from the current iterate, up to penalty_rounds extra
    /// rounds. Zero rounds disables continuation.
    std::size_t penalty_rounds = 0;
    double penalty_growth = 10.0;
    double violation_tolerance = 1e-6;

    double gradient_tolerance = 1e-8;
    /// 0 selects the default cap of 50 * n_coefficients.
    std::size_t max_iterations = 0;
    /// Seed the optimizer with the least-squares data fit (the
    /// minimum-norm solution when the data are underdetermined).
    bool warm_start_least_squares = true;
    /// Optional CSV trace of per-iteration losses.
    std::string iteration_log_path;
    /// Written as a leading `# ...` line of the trace.
    std::string iteration_log_comment;
};

/// Constraint residual evaluators and the data design matrix bound to one
/// basis. Building this is the expensive part of training; it can be
/// reused across coefficient vectors (loss reports, sparse refits on the
/// same basis).
class TrainingProblem {
public:
    TrainingProblem(const MultiIndexSet& indices, const DomainScaling& scaling,
                    const TrainingData& data, const ConstraintSet& constraints);

    std::size_t n_coefficients() const { return n_coeffs_; }
    bool has_data() const { return targets_.size() > 0; }

    /// Unweighted per-kind mean squared residuals at the given
    /// coefficients.
    LossBreakdown losses(const Eigen::VectorXd& coeffs) const;

    /// Weighted objective and (optionally) its gradient under frozen
    /// weights taken from the breakdown's weight fields.
    double objective(const Eigen::VectorXd& coeffs, const LossBreakdown& weights,
                     Eigen::VectorXd* grad) const;

    /// Fills the weight fields: adaptive sets each data/PDE/IC/BC weight
    /// to loss / sum(losses) over the present terms (uniform when every
    /// loss vanishes); otherwise the fixed weights from the options are
    /// applied. Inequality penalty factors always come from the options.
    void assign_weights(LossBreakdown& b, const TrainOptions& opt) const;

    /// Worst inequality violation magnitude over all collocation points
    /// (zero when every constraint holds).
    double max_violation(const Eigen::VectorXd& coeffs) const;

    bool has_inequalities() const { return !inequalities_.empty(); }

    /// Plain least-squares fit on the data term alone.
    Eigen::VectorXd data_least_squares() const;

    /// Problem restricted to a subset of the basis (columns of every
    /// precomputed matrix). Used by the sparse loop to try candidate
    /// bases without re-evaluating basis polynomials.
    TrainingProblem subset(std::span<const std::size_t> columns) const;

    const Eigen::MatrixXd& data_design() const { return data_design_; }
    const Eigen::VectorXd& data_targets() const { return targets_; }

private:
    TrainingProblem() = default;
    std::size_t n_coeffs_;
    Eigen::MatrixXd data_design_;
    Eigen::VectorXd targets_;
    std::vector<CompiledResidual> equalities_;
    std::vector<ConstraintKind> equality_kinds_;
    std::vector<CompiledResidual> inequalities_;
    std::size_t n_pde_points_ = 0, n_ic_points_ = 0, n_bc_points_ = 0;
};

struct TrainResult {
    SurrogateModel model;
    LossBreakdown losses;
    std::size_t iterations = 0;
    std::size_t function_evaluations = 0;
    bool converged = false;
    bool hit_iteration_cap = false;
    bool line_search_stalled = false;
    /// Continuation re-trains actually taken (0 when disabled or the
    /// first solve already met the violation tolerance).
    std::size_t penalty_rounds_used = 0;
};

/// Trains coefficients over the given basis by minimizing the weighted
/// sum of data misfit, equality constraint residuals, and hinge penalties
/// with BFGS. Throws when neither data nor constraints are supplied.
TrainResult train(const MultiIndexSet& indices, const DomainScaling& scaling,
                  const TrainingData& data, const ConstraintSet& constraints,
                  const TrainOptions& options);

/// Same, on an already-built problem. indices must describe the basis the
/// problem was built (or subset) with.
TrainResult train(const TrainingProblem& problem, const MultiIndexSet& indices,
                  const DomainScaling& scaling, const TrainOptions& options);

/// One-off loss report for existing coefficients.
LossBreakdown compute_losses(const SurrogateModel& model, const TrainingData& data,
                             const ConstraintSet& constraints,
                             const TrainOptions& options);

} // namespace pc2

#endif
