#ifndef PC2_RANDOMFIELD_HPP
#define PC2_RANDOMFIELD_HPP

#include <cstddef>
#include <functional>
#include <span>

#include <Eigen/Dense>

namespace pc2 {

using CovarianceFn = std::function<double(double, double)>;

/// C(x1, x2) = sigma^2 exp(-|x1 - x2| / corr_length).
CovarianceFn exponential_covariance(double sigma, double corr_length);

/// Truncated Karhunen-Loeve expansion of a one-dimensional field on
/// [0, length]:
///   F(x, xi) = mean + sum_i sqrt(lambda_i) mode_i(x) xi_i
/// with the xi independent standard normals. Modes are discretized on a
/// uniform grid and interpolated linearly in between.
struct KlExpansion {
    double mean = 0.0;
    Eigen::VectorXd grid;
    Eigen::VectorXd eigenvalues; ///< descending, strictly positive
    Eigen::MatrixXd modes;       ///< column i: mode on the grid, unit L2([0,L]) norm
    /// Fraction of the total field variance sigma^2 * L captured by the
    /// retained modes.
    double captured_variance = 0.0;

    std::size_t n_modes() const { return static_cast<std::size_t>(eigenvalues.size()); }

    /// Field value at x for the given standard normal coordinates.
    double evaluate(double x, std::span<const double> xi) const;
};

/// Discretizes the covariance operator with the Nystroem method
/// (trapezoid weights, symmetrized eigenproblem) and keeps the n_modes
/// leading eigenpairs. Mode signs are fixed (first grid value of
/// meaningful magnitude made positive) so expansions are reproducible.
/// Throws SolverError when a requested eigenvalue is not positive.
KlExpansion kl_expand(const CovarianceFn& covariance, double length,
                      std::size_t n_modes, std::size_t n_grid = 513,
                      double mean = 0.0);

} // namespace pc2

#endif
