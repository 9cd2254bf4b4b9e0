#ifndef PC2_CONSTRAINTS_HPP
#define PC2_CONSTRAINTS_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pc2/basis.hpp"

namespace pc2 {

/// Scalar field of the physical point (load terms, known coefficient
/// fields, manufactured right-hand sides).
using SourceFn = std::function<double(std::span<const double>)>;

class SourceRegistry {
public:
    void add(const std::string& name, SourceFn fn);
    const SourceFn& get(const std::string& name) const;
    bool contains(const std::string& name) const;

private:
    std::map<std::string, SourceFn> fns_;
};

/// Expression over the surrogate and its partial derivatives. Trees are
/// immutable and shared.
struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    enum class Kind {
        SurrogateTerm, ///< partial derivative of the surrogate (orders per dim)
        Coordinate,    ///< physical coordinate of the evaluation point
        Constant,
        SourceTerm,    ///< named scalar field evaluated at the point
        Sum,
        Product,
        Power,         ///< integer exponent applied to the single child
        Negate,
    };

    Kind kind;
    std::vector<int> orders;  ///< SurrogateTerm
    std::size_t coord = 0;    ///< Coordinate
    double value = 0.0;       ///< Constant
    std::string source_name;  ///< SourceTerm
    SourceFn source;          ///< SourceTerm, resolved at parse time
    int exponent = 1;         ///< Power
    std::vector<ExprPtr> children;

    static ExprPtr surrogate(std::vector<int> orders);
    static ExprPtr coordinate(std::size_t dim);
    static ExprPtr constant(double v);
    static ExprPtr make_source(std::string name, SourceFn fn);
    static ExprPtr sum(std::vector<ExprPtr> terms);
    static ExprPtr product(std::vector<ExprPtr> factors);
    static ExprPtr power(ExprPtr base, int k);
    static ExprPtr negate(ExprPtr e);
};

/// Degree of the expression as a polynomial in the surrogate coefficients,
/// saturated at 2. Degree <= 1 means the residual is affine and admits a
/// precomputed matrix form.
int coefficient_degree(const Expr& e);

/// Compact listing for logs and config echoes.
std::string to_string(const Expr& e, std::span<const std::string> dim_names);

/// Names available to the expression parser. Dimension names become
/// Coordinate nodes; "u" is the surrogate itself. Single-letter dimension
/// names additionally enable derivative shorthand: (dt u), (dxx u),
/// (dxy u). The general form (diff u <dim> <order> ...) works for any
/// dimension name.
struct ExprContext {
    std::vector<std::string> dim_names;
    const SourceRegistry* sources = nullptr;
};

/// Parses one s-expression, e.g.
///   (- (dt u) (* alpha (+ (dxx u) (dyy u))))
/// Operators: + - * neg pow diff source and the d<dims> shorthand.
/// Throws ConfigError on malformed input or unknown names.
ExprPtr parse_expression(const std::string& text, const ExprContext& ctx);

enum class ConstraintKind : std::uint8_t { Pde, InitialCondition, BoundaryCondition };
const char* constraint_kind_name(ConstraintKind k);

/// residual == 0 enforced at the stored collocation points (rows, physical
/// units).
struct EqualityConstraint {
    ConstraintKind kind;
    ExprPtr residual;
    Eigen::MatrixXd points;
};

/// expr >= 0 enforced at the stored points through a hinge penalty.
struct InequalityConstraint {
    ExprPtr expr;
    Eigen::MatrixXd points;
};

struct ConstraintSet {
    std::vector<EqualityConstraint> equalities;
    std::vector<InequalityConstraint> inequalities;
};

/// Negative part: v for v < 0, else 0. Squared in the penalty so the
/// objective stays differentiable.
inline double hinge(double v) { return v < 0.0 ? v : 0.0; }

/// One boundary face of the domain box with its residual expression.
struct BoundaryFace {
    std::size_t dim = 0;
    bool upper = false;
    ExprPtr residual;
};

/// Samples collocation points and assembles the equality constraints of an
/// initial/boundary value problem. Interior points cover every dimension;
/// initial-condition points pin the time dimension to its lower bound;
/// boundary points pin the face dimension to the face bound. n_bc is split
/// evenly across faces (earlier faces absorb the remainder). Each part
/// draws from an independent substream of root_seed, so the parts can be
/// resized independently without reshuffling one another.
ConstraintSet build_pde_constraints(const DomainScaling& scaling,
                                    std::optional<std::size_t> time_dim,
                                    const ExprPtr& pde_residual, std::size_t n_pde,
                                    const ExprPtr& ic_residual, std::size_t n_ic,
                                    const std::vector<BoundaryFace>& faces,
                                    std::size_t n_bc,
                                    std::uint64_t root_seed);

/// Residual evaluator bound to a basis and a fixed set of points.
/// Affine residuals collapse to a single precomputed matrix; general
/// residuals keep one design matrix per distinct derivative tuple and
/// propagate exact derivatives with respect to the coefficients through
/// the expression tree.
class CompiledResidual {
public:
    CompiledResidual(ExprPtr expr, const MultiIndexSet& indices,
                     const DomainScaling& scaling, Eigen::MatrixXd points);

    std::size_t n_points() const { return static_cast<std::size_t>(points_.rows()); }
    std::size_t n_coefficients() const { return n_coeffs_; }
    bool linear() const { return linear_; }
    const Eigen::MatrixXd& points() const { return points_; }

    /// Evaluator restricted to a subset of the coefficients (columns of
    /// the precomputed matrices). Far cheaper than recompiling on the
    /// reduced basis.
    CompiledResidual subset_columns(std::span<const std::size_t> columns) const;

    struct Evaluation {
        Eigen::VectorXd residuals;
        /// General path only: d(residual_i)/d(tuple value t), per point.
        Eigen::MatrixXd tangents;
    };

    /// Residuals at every point for the given coefficients. Tangents are
    /// filled only when with_tangents is set (needed for gradients).
    Evaluation evaluate(const Eigen::VectorXd& coeffs, bool with_tangents) const;

    /// Accumulates J^T w into grad, where J is the Jacobian of the
    /// residual vector with respect to the coefficients and eval came from
    /// evaluate(coeffs, true) at the same coefficients.
    void accumulate_jacobian_transpose(const Evaluation& eval,
                                       const Eigen::VectorXd& w,
                                       Eigen::VectorXd& grad) const;

private:
    CompiledResidual() = default;

    Eigen::MatrixXd points_;
    std::size_t n_coeffs_ = 0;
    bool linear_ = false;

    // Affine path: residual = design * c + offset.
    Eigen::MatrixXd design_;
    Eigen::VectorXd offset_;

    // General path.
    ExprPtr expr_;
    std::vector<std::vector<int>> tuples_;
    std::vector<Eigen::MatrixXd> tuple_design_;
    std::map<const Expr*, Eigen::VectorXd> source_values_;
    std::map<const Expr*, std::size_t> tuple_of_node_;
};

} // namespace pc2

#endif
