#ifndef PC2_SAMPLING_HPP
#define PC2_SAMPLING_HPP

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pc2/basis.hpp"

namespace pc2 {

/// Deterministic random stream. The engine is std::mt19937_64 (output
/// sequence fixed by the standard) and all value mappings are explicit,
/// so identical seeds give identical samples on every platform. Models
/// record "mt19937_64/v1" in their metadata.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1): top 53 bits of the raw draw.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Unbiased integer in [0, n) by rejection.
    std::uint64_t index(std::uint64_t n);

    /// Standard normal via inverse CDF of uniform01 (deterministic,
    /// monotone in the underlying draw).
    double standard_normal();

    /// Fisher-Yates permutation of 0..n-1.
    std::vector<std::uint32_t> permutation(std::size_t n);

private:
    std::mt19937_64 engine_;
};

/// FNV-1a hash of a string; used to derive independent substreams.
std::uint64_t fnv1a64(const std::string& text);

/// SplitMix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x);

/// Substream seed for a purpose tag ("domain", "IC", "BC0", "ED", ...).
/// Streams with distinct tags are independent of one another, so adding
/// collocation points of one kind does not perturb the others.
std::uint64_t derive_stream_seed(std::uint64_t root_seed, const std::string& tag);

/// Inverse standard normal CDF (Acklam's rational approximation with one
/// Halley refinement step; accurate to ~1e-15 over (0,1)).
double inverse_normal_cdf(double p);

/// One dimension of a sampling request.
struct SampleDim {
    enum class Kind { Uniform, Gaussian } kind = Kind::Uniform;
    double a = 0.0; ///< Uniform: lower bound. Gaussian: mean.
    double b = 1.0; ///< Uniform: upper bound. Gaussian: standard deviation.

    static SampleDim uniform(double lo, double hi) {
        return {Kind::Uniform, lo, hi};
    }
    static SampleDim gaussian(double mean, double sd) {
        return {Kind::Gaussian, mean, sd};
    }
    static SampleDim from_scaled(const ScaledDimension& d);
};

struct SampleSpec {
    std::size_t n_points = 0;
    std::vector<SampleDim> dims;
    std::uint64_t seed = 0;
};

/// Latin hypercube sample: per dimension exactly one point in each of the
/// n_points equal-probability strata, uniform within the stratum, strata
/// paired across dimensions by independent random permutations. Rows are
/// points in physical units.
Eigen::MatrixXd lhs_sample(const SampleSpec& spec);

/// Batch affine standardization of points (rows) against a scaling.
Eigen::MatrixXd standardize(const Eigen::MatrixXd& x_phys,
                            const DomainScaling& scaling);
Eigen::MatrixXd unstandardize(const Eigen::MatrixXd& x_std,
                              const DomainScaling& scaling);

/// Insert a constant column (used for boundary/initial collocation where
/// one coordinate is pinned to a bound).
Eigen::MatrixXd insert_fixed_column(const Eigen::MatrixXd& points,
                                    std::size_t dim, double value);

} // namespace pc2

#endif
