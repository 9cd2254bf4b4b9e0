#ifndef PC2_SURROGATE_HPP
#define PC2_SURROGATE_HPP

#include <cstdint>
#include <map>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "pc2/basis.hpp"

namespace pc2 {

/// Polynomial chaos surrogate: coefficients over a multivariate basis with
/// its domain scaling. Deterministic inputs and random inputs are both
/// dimensions here; the split between them is a post-processing concern.
struct SurrogateModel {
    DomainScaling scaling;
    MultiIndexSet indices;
    Eigen::VectorXd coefficients;
    /// Free-form provenance (seed, generator id, preset name, ...). Saved
    /// and restored verbatim.
    std::map<std::string, std::string> metadata;

    std::size_t dims() const { return scaling.dims(); }
    std::size_t terms() const { return indices.size(); }
    void validate() const;

    /// Value at one physical point.
    double evaluate(std::span<const double> x_phys) const;
    /// Mixed partial derivative at one physical point; orders[j] is the
    /// derivative order along dimension j.
    double evaluate_partial(std::span<const double> x_phys,
                            std::span<const int> orders) const;
    /// Batch evaluation; rows of x_phys are points.
    Eigen::VectorXd evaluate(const Eigen::MatrixXd& x_phys) const;
};

/// Design matrix: entry (i,k) is basis function k at point i. Rows of
/// x_phys are points in physical units.
Eigen::MatrixXd build_design_matrix(const MultiIndexSet& indices,
                                    const DomainScaling& scaling,
                                    const Eigen::MatrixXd& x_phys);

/// Same layout, but each entry is the mixed partial of the basis function
/// with the given orders (chain-rule factors included).
Eigen::MatrixXd build_partial_matrix(const MultiIndexSet& indices,
                                     const DomainScaling& scaling,
                                     const Eigen::MatrixXd& x_phys,
                                     std::span<const int> orders);

/// Least-squares coefficients via column-pivoted QR.
/// Throws UnderdeterminedSystem when rows < cols and RankDeficient when
/// the numerical rank (threshold 1e-10 relative to the largest pivot)
/// falls short of the column count.
Eigen::VectorXd ols_solve(const Eigen::MatrixXd& design,
                          const Eigen::VectorXd& targets);

/// Versioned text serialization. Coefficients and scaling bounds are
/// written as C hexfloats so a save/load round trip is bit-exact; the
/// trailing line carries an FNV-1a checksum of the body.
void save_model(const SurrogateModel& model, const std::string& path);
SurrogateModel load_model(const std::string& path);

} // namespace pc2

#endif
