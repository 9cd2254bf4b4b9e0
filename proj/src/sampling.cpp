#include "pc2/sampling.hpp"

#include <cmath>

#include "pc2/errors.hpp"

namespace pc2 {

std::uint64_t Rng::index(std::uint64_t n) {
    if (n == 0) throw Error("Rng::index: n must be positive");
    // Rejection keeps the draw unbiased for any n.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % n;
}

double Rng::standard_normal() {
    // uniform01() can return exactly 0; shift into (0,1) by half an ulp
    // of the grid so the inverse CDF stays finite.
    const double u = uniform01() + 0x1.0p-54;
    return inverse_normal_cdf(u);
}

std::vector<std::uint32_t> Rng::permutation(std::size_t n) {
    std::vector<std::uint32_t> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = static_cast<std::uint32_t>(i);
    for (std::size_t i = n; i > 1; --i) {
        const std::uint64_t j = index(i);
        std::swap(p[i - 1], p[j]);
    }
    return p;
}

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_stream_seed(std::uint64_t root_seed, const std::string& tag) {
    return splitmix64(root_seed ^ fnv1a64(tag));
}

double inverse_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw Error("inverse_normal_cdf: p must lie in (0,1)");

    // Acklam's approximation.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;

    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    // One Halley step against the exact CDF brings the error near machine
    // precision.
    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
    x = x - u / (1.0 + 0.5 * x * u);
    return x;
}

SampleDim SampleDim::from_scaled(const ScaledDimension& d) {
    if (d.family == PolynomialFamily::HermiteOrthonormal)
        return gaussian(d.lower, d.upper);
    return uniform(d.lower, d.upper);
}

Eigen::MatrixXd lhs_sample(const SampleSpec& spec) {
    const std::size_t n = spec.n_points;
    const std::size_t m = spec.dims.size();
    if (m == 0) throw Error("lhs_sample: no dimensions given");
    for (const SampleDim& d : spec.dims) {
        if (d.kind == SampleDim::Kind::Uniform && !(d.a < d.b))
            throw Error("lhs_sample: uniform dimension needs a < b");
        if (d.kind == SampleDim::Kind::Gaussian && !(d.b > 0.0))
            throw Error("lhs_sample: gaussian dimension needs positive sd");
    }

    Eigen::MatrixXd points(static_cast<Eigen::Index>(n),
                           static_cast<Eigen::Index>(m));
    Rng rng(spec.seed);
    for (std::size_t j = 0; j < m; ++j) {
        const std::vector<std::uint32_t> perm = rng.permutation(n);
        const SampleDim& dim = spec.dims[j];
        for (std::size_t i = 0; i < n; ++i) {
            // Stratified quantile in (0,1): stratum perm[i], jittered.
            const double u = (static_cast<double>(perm[i]) + rng.uniform01()) /
                             static_cast<double>(n);
            double v;
            if (dim.kind == SampleDim::Kind::Uniform) {
                v = dim.a + (dim.b - dim.a) * u;
            } else {
                const double q = std::max(u, 0x1.0p-54);
                v = dim.a + dim.b * inverse_normal_cdf(q);
            }
            points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        }
    }
    return points;
}

Eigen::MatrixXd standardize(const Eigen::MatrixXd& x_phys,
                            const DomainScaling& scaling) {
    if (static_cast<std::size_t>(x_phys.cols()) != scaling.dims())
        throw DimensionMismatch("standardize: column count does not match scaling");
    Eigen::MatrixXd out(x_phys.rows(), x_phys.cols());
    for (Eigen::Index j = 0; j < x_phys.cols(); ++j) {
        const ScaledDimension& d = scaling.dim(static_cast<std::size_t>(j));
        for (Eigen::Index i = 0; i < x_phys.rows(); ++i)
            out(i, j) = d.to_standard(x_phys(i, j));
    }
    return out;
}

Eigen::MatrixXd unstandardize(const Eigen::MatrixXd& x_std,
                              const DomainScaling& scaling) {
    if (static_cast<std::size_t>(x_std.cols()) != scaling.dims())
        throw DimensionMismatch("unstandardize: column count does not match scaling");
    Eigen::MatrixXd out(x_std.rows(), x_std.cols());
    for (Eigen::Index j = 0; j < x_std.cols(); ++j) {
        const ScaledDimension& d = scaling.dim(static_cast<std::size_t>(j));
        for (Eigen::Index i = 0; i < x_std.rows(); ++i)
            out(i, j) = d.from_standard(x_std(i, j));
    }
    return out;
}

Eigen::MatrixXd insert_fixed_column(const Eigen::MatrixXd& points,
                                    std::size_t dim, double value) {
    if (dim > static_cast<std::size_t>(points.cols()))
        throw DimensionMismatch("insert_fixed_column: dim out of range");
    Eigen::MatrixXd out(points.rows(), points.cols() + 1);
    const Eigen::Index d = static_cast<Eigen::Index>(dim);
    out.leftCols(d) = points.leftCols(d);
    out.col(d).setConstant(value);
    out.rightCols(points.cols() - d) = points.rightCols(points.cols() - d);
    return out;
}

} // namespace pc2
