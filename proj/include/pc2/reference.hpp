#ifndef PC2_REFERENCE_HPP
#define PC2_REFERENCE_HPP

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pc2 {

/// ---- 2D heat equation -------------------------------------------------
/// u_t = alpha (u_xx + u_yy) on [0,1]^2, homogeneous Neumann walls,
/// u(x,y,0) = 0.5 (sin(4 pi x) + sin(4 pi y)).
/// Crank-Nicolson in time, second-order central differences with mirrored
/// ghost nodes in space.

double heat2d_initial(double x, double y);

struct Heat2dParams {
    double alpha = 0.01;
    std::size_t nx = 99; ///< nodes per axis, including walls
    std::size_t ny = 99;
    std::size_t nt = 490; ///< time steps
    double t_end = 1.0;
};

struct Heat2dSolution {
    Heat2dParams params;
    Eigen::VectorXd xs, ys, ts;
    /// frames[k](i, j) = u(xs[i], ys[j], ts[k])
    std::vector<Eigen::MatrixXd> frames;

    /// Trilinear interpolation inside the grid.
    double at(double x, double y, double t) const;
};

Heat2dSolution heat2d_solve(const Heat2dParams& params);

/// ---- 1D viscous Burgers ------------------------------------------------
/// u_t + u u_x = nu u_xx on [0,1], u(0,t) = u(1,t) = 0,
/// u(x,0) = sin(pi x). Crank-Nicolson with a Newton solve per step,
/// conservative central convection.

double burgers_initial(double x);

struct BurgersParams {
    double nu = 0.01;
    std::size_t nx = 513; ///< nodes including ends
    std::size_t nt = 600; ///< time steps
    double t_end = 0.3;
};

struct BurgersSolution {
    BurgersParams params;
    Eigen::VectorXd xs, ts;
    /// frames(k, i) = u(xs[i], ts[k])
    Eigen::MatrixXd frames;

    /// Bilinear interpolation inside the grid.
    double at(double x, double t) const;
};

BurgersSolution burgers_solve(const BurgersParams& params);

/// ---- Simply supported beam under uniform load ---------------------------
/// Euler-Bernoulli statics with spatially varying modulus:
///   w''(x) = M(x) / (E(x) I),  w(0) = w(L) = 0,
/// where integrating E I w'''' = q with free moments at the pins gives the
/// statically determinate M(x) = q x (x - L) / 2, so a downward load
/// (q < 0) produces a negative midspan deflection.
/// Solved by double trapezoid integration plus the linear correction that
/// restores w(L) = 0.

double beam_moment(double x, double length, double load);

struct BeamParams {
    double length = 10.0;
    double load = -5000.0;  ///< line load q, negative is downward
    double inertia = 1e-4;
    std::size_t nx = 1025;
    std::function<double(double)> modulus; ///< E(x)
};

struct BeamSolution {
    Eigen::VectorXd xs, w;

    /// Linear interpolation inside the grid.
    double at(double x) const;
};

BeamSolution beam_solve(const BeamParams& params);

/// ---- Monte Carlo moments -------------------------------------------------

struct McsResult {
    double mean = 0.0;
    double variance = 0.0; ///< unbiased (n - 1 denominator)
    std::size_t count = 0;
};

/// Mean and variance of sample(0..n-1) accumulated over a fixed binary
/// combination tree, so the result does not depend on evaluation batching.
McsResult mcs_moments(std::size_t n,
                      const std::function<double(std::size_t)>& sample);

/// ---- Solution cache --------------------------------------------------------
/// Matrices keyed by an arbitrary parameter string; files carry the key
/// and a content checksum, so stale or foreign files are simply misses.

bool cache_load_matrix(const std::string& dir, const std::string& key,
                       Eigen::MatrixXd& out);
void cache_store_matrix(const std::string& dir, const std::string& key,
                        const Eigen::MatrixXd& matrix);

} // namespace pc2

#endif
