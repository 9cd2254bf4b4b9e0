#ifndef PC2_BASIS_HPP
#define PC2_BASIS_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace pc2 {

/// Univariate orthonormal polynomial families.
///
/// LegendreOrthonormal: orthonormal w.r.t. the uniform density on [-1, 1],
/// phi_k(x) = sqrt(2k+1) * P_k(x). Used for uniformly distributed inputs
/// (all space/time variables and uniform random parameters).
///
/// HermiteOrthonormal: probabilists' Hermite normalized to unit norm,
/// phi_k(x) = He_k(x) / sqrt(k!), orthonormal w.r.t. the standard Gaussian
/// density. Used for Gaussian random inputs.
enum class PolynomialFamily : std::uint8_t {
    LegendreOrthonormal = 0,
    HermiteOrthonormal = 1,
};

const char* family_name(PolynomialFamily family);
PolynomialFamily family_from_name(const std::string& name);

/// Evaluate the orthonormal polynomial of the given degree at a standardized
/// coordinate, via the family's three-term recurrence in normalized form.
double univariate_eval(PolynomialFamily family, int degree, double x_std);

/// order-th derivative (order >= 1) of the orthonormal polynomial with
/// respect to the standardized coordinate. No domain scaling factor is
/// applied here; multivariate_partial applies it.
double univariate_derivative(PolynomialFamily family, int degree, int order,
                             double x_std);

/// One input dimension: polynomial family plus the affine map between
/// physical and standardized coordinates.
///
/// Legendre dimensions map the physical interval [lower, upper] onto [-1, 1].
/// Hermite dimensions interpret lower as the mean and upper as the standard
/// deviation of the Gaussian input; the standardized coordinate is the
/// z-score.
struct ScaledDimension {
    PolynomialFamily family = PolynomialFamily::LegendreOrthonormal;
    double lower = -1.0;
    double upper = 1.0;

    double to_standard(double x_phys) const;
    double from_standard(double x_std) const;

    /// d(standard)/d(physical): 2/(upper-lower) for Legendre, 1/sigma for
    /// Hermite. Chain-rule factor for each derivative order.
    double derivative_scale() const;

    void validate() const;

    bool operator==(const ScaledDimension&) const = default;
};

/// Per-dimension scaling for the full input vector (physical + stochastic).
class DomainScaling {
public:
    DomainScaling() = default;
    explicit DomainScaling(std::vector<ScaledDimension> dims);

    std::size_t dims() const { return dims_.size(); }
    const ScaledDimension& dim(std::size_t i) const { return dims_.at(i); }
    const std::vector<ScaledDimension>& all() const { return dims_; }

    void to_standard(std::span<const double> x_phys,
                     std::span<double> x_std) const;
    void from_standard(std::span<const double> x_std,
                       std::span<double> x_phys) const;

    bool operator==(const DomainScaling&) const = default;

private:
    std::vector<ScaledDimension> dims_;
};

/// Total-degree truncation set: all multi-indices alpha with |alpha|_1 <= p,
/// in graded lexicographic order (total degree major, lexicographic minor).
/// The ordering is deterministic so serialized models and regression paths
/// reproduce exactly.
class MultiIndexSet {
public:
    MultiIndexSet() = default;
    /// flat is row-major tuple storage; the maximum total degree is
    /// derived from the tuples.
    MultiIndexSet(std::size_t dims, std::vector<int> flat);

    std::size_t size() const { return count_; }
    std::size_t dims() const { return dims_; }
    int max_degree() const { return max_degree_; }

    std::span<const int> operator[](std::size_t i) const {
        return {flat_.data() + i * dims_, dims_};
    }

    /// Total degree of tuple i.
    int degree(std::size_t i) const;

    /// Position of the all-zero tuple, or npos if absent.
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    std::size_t zero_position() const;

    /// Subset containing the tuples at the given positions (order kept).
    MultiIndexSet subset(std::span<const std::size_t> positions) const;

    bool operator==(const MultiIndexSet&) const = default;

private:
    std::size_t dims_ = 0;
    std::size_t count_ = 0;
    int max_degree_ = 0;
    std::vector<int> flat_;
};

/// Number of multi-indices in the total-degree set: (dims+p)! / (dims! p!).
/// Throws BasisTooLarge when the count exceeds max_terms.
std::size_t total_degree_cardinality(std::size_t dims, int max_degree,
                                     std::size_t max_terms);

constexpr std::size_t kDefaultMaxBasisTerms = 2'000'000;

MultiIndexSet total_degree_index_set(std::size_t dims, int max_degree,
                                     std::size_t max_terms = kDefaultMaxBasisTerms);

/// Tensor-product basis function value at a physical point.
double multivariate_eval(std::span<const int> alpha, const DomainScaling& scaling,
                         std::span<const double> x_phys);

/// Physical-coordinate partial derivative of the basis function:
/// product of standardized univariate derivatives times the chain-rule
/// scaling factor per differentiated dimension.
double multivariate_partial(std::span<const int> alpha,
                            const DomainScaling& scaling,
                            std::span<const double> x_phys,
                            std::span<const int> orders);

} // namespace pc2

#endif
