#ifndef PC2_QUADRATURE_HPP
#define PC2_QUADRATURE_HPP

#include <Eigen/Dense>

#include "pc2/basis.hpp"

namespace pc2 {

/// Nodes and weights of a Gauss rule. Weights are normalized against the
/// probability measure of the family (they sum to 1), so
/// sum_i w_i f(x_i) approximates E[f(X)].
struct QuadratureRule {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
};

/// n-point Gauss rule for the family's weight measure, computed by
/// Golub-Welsch from the monic recurrence coefficients. Exact for
/// polynomials of degree <= 2n-1.
QuadratureRule gauss_rule(PolynomialFamily family, int n);

} // namespace pc2

#endif
