#include "pc2/quadrature.hpp"

#include <cmath>

#include "pc2/errors.hpp"

namespace pc2 {

QuadratureRule gauss_rule(PolynomialFamily family, int n) {
    if (n < 1) throw Error("gauss_rule requires n >= 1");

    // Monic recurrence p_{k+1} = (x - a_k) p_k - b_k p_{k-1} for the
    // normalized measure: Legendre (uniform on [-1,1]) has a_k = 0,
    // b_k = k^2/(4k^2-1); probabilists' Hermite has a_k = 0, b_k = k.
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        double b;
        if (family == PolynomialFamily::LegendreOrthonormal) {
            b = static_cast<double>(k) * k / (4.0 * k * k - 1.0);
        } else {
            b = static_cast<double>(k);
        }
        jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(b);
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
    if (solver.info() != Eigen::Success)
        throw Error("gauss_rule: eigen decomposition failed");

    QuadratureRule rule;
    rule.nodes = solver.eigenvalues();
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        const double v0 = solver.eigenvectors()(0, i);
        rule.weights[i] = v0 * v0;
    }
    return rule;
}

} // namespace pc2
