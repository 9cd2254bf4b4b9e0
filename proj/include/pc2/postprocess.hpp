#ifndef PC2_POSTPROCESS_HPP
#define PC2_POSTPROCESS_HPP

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pc2/surrogate.hpp"

namespace pc2 {

/// Surrogate regrouped by its random dimensions: for every distinct
/// sub-tuple over the random dimensions there is one polynomial in the
/// deterministic dimensions. Moments and sensitivities at a fixed
/// deterministic point then follow from basis orthonormality without
/// sampling.
struct ReducedPce {
    std::vector<std::size_t> det_dims;  ///< positions in the original model
    std::vector<std::size_t> rand_dims;
    DomainScaling det_scaling;
    DomainScaling rand_scaling;
    /// Distinct random sub-tuples, graded lexicographic. Row zero_pos is
    /// the all-zero tuple.
    MultiIndexSet rand_indices;
    std::size_t zero_pos = 0;
    /// One polynomial in the deterministic dimensions per random
    /// sub-tuple, aligned with rand_indices.
    std::vector<SurrogateModel> conditional;
};

/// Splits the model along the given random dimensions (positions into the
/// model's dimension list, any order, no duplicates).
ReducedPce reduce(const SurrogateModel& model,
                  std::span<const std::size_t> random_dims);

/// Coefficients of the purely random expansion conditioned on a
/// deterministic point: entry k is the conditional polynomial k evaluated
/// at x_det.
Eigen::VectorXd conditional_coefficients(const ReducedPce& reduced,
                                         std::span<const double> x_det);

struct MomentEstimate {
    double mean = 0.0;
    double variance = 0.0;
};

/// Mean and variance of the surrogate output over the random dimensions,
/// at a fixed deterministic point.
MomentEstimate conditional_moments(const ReducedPce& reduced,
                                   std::span<const double> x_det);

/// First-order Sobol index per random dimension at a fixed deterministic
/// point. Throws ZeroVariance when the conditional variance vanishes.
Eigen::VectorXd sobol_first_order(const ReducedPce& reduced,
                                  std::span<const double> x_det);

/// Total Sobol index per random dimension.
Eigen::VectorXd sobol_total(const ReducedPce& reduced,
                            std::span<const double> x_det);

struct PdfEstimate {
    Eigen::VectorXd grid;
    Eigen::VectorXd density;
    double bandwidth = 0.0;
    Eigen::VectorXd samples; ///< the surrogate outputs behind the estimate
};

/// Kernel density estimate of the output distribution at a fixed
/// deterministic point: random inputs are sampled from their
/// distributions, pushed through the reduced expansion, and smoothed with
/// a Gaussian kernel (Silverman bandwidth).
PdfEstimate pdf_estimate(const ReducedPce& reduced, std::span<const double> x_det,
                         std::size_t n_samples, std::uint64_t seed,
                         std::size_t n_grid = 256);

/// Standardized sample matrix of the random dimensions (rows: samples),
/// distribution per dimension taken from the scaling. Shared by the PDF
/// estimator and sampling-based validation.
Eigen::MatrixXd sample_standard_inputs(const DomainScaling& rand_scaling,
                                       std::size_t n_samples, std::uint64_t seed);

} // namespace pc2

#endif
