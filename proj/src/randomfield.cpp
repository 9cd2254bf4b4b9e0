#include "pc2/randomfield.hpp"

#include <cmath>

#include "pc2/errors.hpp"

namespace pc2 {

CovarianceFn exponential_covariance(double sigma, double corr_length) {
    if (!(sigma > 0.0) || !(corr_length > 0.0))
        throw ConfigError("exponential_covariance: sigma and corr_length must be positive");
    const double s2 = sigma * sigma;
    return [s2, corr_length](double x1, double x2) {
        return s2 * std::exp(-std::abs(x1 - x2) / corr_length);
    };
}

double KlExpansion::evaluate(double x, std::span<const double> xi) const {
    if (xi.size() != n_modes())
        throw DimensionMismatch("KlExpansion::evaluate: coordinate count != mode count");
    const Eigen::Index n = grid.size();
    const double lo = grid[0], hi = grid[n - 1];
    if (x < lo - 1e-12 * (hi - lo) || x > hi + 1e-12 * (hi - lo))
        throw Error("KlExpansion::evaluate: x outside the field domain");

    const double step = (hi - lo) / static_cast<double>(n - 1);
    double pos = (x - lo) / step;
    Eigen::Index i0 = static_cast<Eigen::Index>(pos);
    if (i0 >= n - 1) i0 = n - 2;
    const double frac = std::min(std::max(pos - static_cast<double>(i0), 0.0), 1.0);

    double value = mean;
    for (std::size_t k = 0; k < n_modes(); ++k) {
        const Eigen::Index kk = static_cast<Eigen::Index>(k);
        const double mode = modes(i0, kk) * (1.0 - frac) + modes(i0 + 1, kk) * frac;
        value += std::sqrt(eigenvalues[kk]) * mode * xi[k];
    }
    return value;
}

KlExpansion kl_expand(const CovarianceFn& covariance, double length,
                      std::size_t n_modes, std::size_t n_grid, double mean) {
    if (!covariance) throw ConfigError("kl_expand: empty covariance function");
    if (!(length > 0.0)) throw ConfigError("kl_expand: length must be positive");
    if (n_modes == 0) throw ConfigError("kl_expand: need at least one mode");
    if (n_grid < 2 * n_modes || n_grid < 16)
        throw ConfigError("kl_expand: grid too coarse for the requested mode count");

    const Eigen::Index n = static_cast<Eigen::Index>(n_grid);
    KlExpansion kl;
    kl.mean = mean;
    kl.grid.resize(n);
    const double step = length / static_cast<double>(n - 1);
    for (Eigen::Index i = 0; i < n; ++i)
        kl.grid[i] = step * static_cast<double>(i);

    Eigen::VectorXd w(n);
    w.setConstant(step);
    w[0] = w[n - 1] = 0.5 * step;
    const Eigen::VectorXd sqrt_w = w.cwiseSqrt();

    Eigen::MatrixXd c(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double v = covariance(kl.grid[i], kl.grid[j]);
            c(i, j) = v;
            c(j, i) = v;
        }
    double trace = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) trace += w[i] * c(i, i);

    // Symmetrized Nystroem: B = W^{1/2} C W^{1/2} shares the integral
    // operator's eigenvalues; modes are recovered as W^{-1/2} v.
    Eigen::MatrixXd b = sqrt_w.asDiagonal() * c * sqrt_w.asDiagonal();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b);
    if (eig.info() != Eigen::Success)
        throw SolverError("kl_expand: eigensolver failed");

    kl.eigenvalues.resize(static_cast<Eigen::Index>(n_modes));
    kl.modes.resize(n, static_cast<Eigen::Index>(n_modes));
    double captured = 0.0;
    for (std::size_t k = 0; k < n_modes; ++k) {
        const Eigen::Index src = n - 1 - static_cast<Eigen::Index>(k); // ascending -> descending
        const double lambda = eig.eigenvalues()[src];
        if (!(lambda > 0.0))
            throw SolverError("kl_expand: requested mode has non-positive eigenvalue; "
                              "reduce the mode count");
        kl.eigenvalues[static_cast<Eigen::Index>(k)] = lambda;
        Eigen::VectorXd mode = eig.eigenvectors().col(src).cwiseQuotient(sqrt_w);

        const double peak = mode.cwiseAbs().maxCoeff();
        for (Eigen::Index i = 0; i < n; ++i) {
            if (std::abs(mode[i]) > 1e-8 * peak) {
                if (mode[i] < 0.0) mode = -mode;
                break;
            }
        }
        kl.modes.col(static_cast<Eigen::Index>(k)) = mode;
        captured += lambda;
    }
    kl.captured_variance = captured / trace;
    return kl;
}

} // namespace pc2
