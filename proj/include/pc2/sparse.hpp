#ifndef PC2_SPARSE_HPP
#define PC2_SPARSE_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pc2/trainer.hpp"

namespace pc2 {

/// Least angle regression over the design columns, run on centered
/// targets with centered unit-norm columns.
struct LarResult {
    /// Column indices in activation order (intercept carrier excluded).
    std::vector<std::size_t> entry_order;
    /// Columns with no variance after centering (beyond the intercept
    /// carrier); excluded from the path.
    std::vector<std::size_t> degenerate;
    /// First constant nonzero column, which absorbs the mean. Absent when
    /// the design has no constant column.
    std::optional<std::size_t> intercept;
    /// Coefficients at the end of the path in the original column space,
    /// intercept folded back in. When the path completes (every eligible
    /// column active) this equals the least-squares solution.
    Eigen::VectorXd final_coefficients;
    /// False when the path stopped early (more columns than the rows can
    /// identify, or a singular active set).
    bool complete = false;
};

LarResult lar_path(const Eigen::MatrixXd& design, const Eigen::VectorXd& targets);

struct SparseOptions {
    /// Stop growing once the total training loss drops below this.
    double target_loss = 1e-6;
    /// 0 picks max(10, dims + 1).
    std::size_t min_terms = 0;
    /// 0 picks max(5, full_basis / 50).
    std::size_t step = 0;
    /// 0 allows growth up to the full ranked basis.
    std::size_t max_terms = 0;
    TrainOptions train;
    /// Optional CSV with one row per candidate basis size.
    std::string report_path;
    /// Written as a leading `# ...` line of the report.
    std::string report_comment;
};

struct SparseResult {
    TrainResult best;
    /// Positions of the retained basis terms in the full index set,
    /// ascending.
    std::vector<std::size_t> selected;
    LarResult ranking;
    struct Candidate {
        std::size_t n_terms;
        LossBreakdown losses;
    };
    std::vector<Candidate> path;
    bool reached_target = false;
};

/// Basis-adaptive training: ranks the full basis by least angle
/// regression on the training data, then trains on growing prefixes of
/// the ranking (constant term always retained) until the constrained loss
/// reaches the target. Requires nonempty training data.
SparseResult sparse_pc2_train(const MultiIndexSet& indices,
                              const DomainScaling& scaling,
                              const TrainingData& data,
                              const ConstraintSet& constraints,
                              const SparseOptions& options);

/// Plain data-only sparse PCE (the unconstrained baseline): ranks columns
/// by least angle regression on a fit subset of the rows, keeps the path
/// prefix with the smallest squared error on the held-out rows, and
/// refits that prefix on all rows by least squares.
struct BaselineFit {
    /// Full-width coefficients, zero off the selected support.
    Eigen::VectorXd coefficients;
    std::vector<std::size_t> selected; ///< ascending column positions
    double holdout_error = 0.0;        ///< mean squared, at the chosen size
};

/// holdout_fraction of the rows (at least 1, at most rows - 2) is set
/// aside, chosen by seed. Needs at least 3 rows.
BaselineFit baseline_sparse_fit(const Eigen::MatrixXd& design,
                                const Eigen::VectorXd& targets,
                                double holdout_fraction, std::uint64_t seed);

} // namespace pc2

#endif
