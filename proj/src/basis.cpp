#include "pc2/basis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pc2/errors.hpp"

namespace pc2 {

const char* family_name(PolynomialFamily family) {
    switch (family) {
        case PolynomialFamily::LegendreOrthonormal: return "legendre";
        case PolynomialFamily::HermiteOrthonormal: return "hermite";
    }
    throw Error("unknown polynomial family");
}

PolynomialFamily family_from_name(const std::string& name) {
    if (name == "legendre") return PolynomialFamily::LegendreOrthonormal;
    if (name == "hermite") return PolynomialFamily::HermiteOrthonormal;
    throw SchemaError("unknown polynomial family: " + name);
}

namespace {

// Normalized three-term recurrences:
//   Legendre: phi_{k+1} = A_k x phi_k - C_k phi_{k-1},
//     A_k = sqrt((2k+1)(2k+3))/(k+1), C_k = k/(k+1) sqrt((2k+3)/(2k-1))
//   Hermite:  phi_{k+1} = (x phi_k - sqrt(k) phi_{k-1}) / sqrt(k+1)
// Differentiating m times turns x*phi into x*phi^(m) + m*phi^(m-1), so the
// same recurrence propagates whole derivative rows.
double eval_recurrence(PolynomialFamily family, int degree, int order, double x) {
    if (degree < 0) throw Error("polynomial degree must be nonnegative");
    if (order < 0) throw Error("derivative order must be nonnegative");
    if (order > degree) return 0.0;

    const int m = order;
    // rows of derivatives 0..m for degrees k-1 and k
    std::vector<double> prev(m + 1, 0.0), cur(m + 1, 0.0), next(m + 1, 0.0);
    cur[0] = 1.0; // phi_0 = 1
    if (degree == 0) return cur[m];

    for (int k = 0; k < degree; ++k) {
        double a, b, c; // phi_{k+1} = a*x*phi_k + b*phi_k' terms, - c*phi_{k-1}
        if (family == PolynomialFamily::LegendreOrthonormal) {
            a = std::sqrt((2.0 * k + 1.0) * (2.0 * k + 3.0)) / (k + 1.0);
            c = (k == 0) ? 0.0
                         : (static_cast<double>(k) / (k + 1.0)) *
                               std::sqrt((2.0 * k + 3.0) / (2.0 * k - 1.0));
        } else {
            a = 1.0 / std::sqrt(k + 1.0);
            c = (k == 0) ? 0.0 : std::sqrt(static_cast<double>(k) / (k + 1.0));
        }
        b = a; // derivative of (x * phi) contributes j * phi^(j-1) with the same factor
        for (int j = 0; j <= m; ++j) {
            const double dprev = (j > 0) ? cur[j - 1] : 0.0;
            next[j] = a * x * cur[j] + b * j * dprev - c * prev[j];
        }
        std::swap(prev, cur);
        std::swap(cur, next);
    }
    return cur[m];
}

} // namespace

double univariate_eval(PolynomialFamily family, int degree, double x_std) {
    return eval_recurrence(family, degree, 0, x_std);
}

double univariate_derivative(PolynomialFamily family, int degree, int order,
                             double x_std) {
    if (order < 1) throw Error("univariate_derivative requires order >= 1");
    return eval_recurrence(family, degree, order, x_std);
}

double ScaledDimension::to_standard(double x_phys) const {
    if (family == PolynomialFamily::LegendreOrthonormal) {
        return 2.0 * (x_phys - lower) / (upper - lower) - 1.0;
    }
    return (x_phys - lower) / upper;
}

double ScaledDimension::from_standard(double x_std) const {
    if (family == PolynomialFamily::LegendreOrthonormal) {
        return lower + 0.5 * (x_std + 1.0) * (upper - lower);
    }
    return lower + x_std * upper;
}

double ScaledDimension::derivative_scale() const {
    if (family == PolynomialFamily::LegendreOrthonormal) {
        return 2.0 / (upper - lower);
    }
    return 1.0 / upper;
}

void ScaledDimension::validate() const {
    if (family == PolynomialFamily::LegendreOrthonormal) {
        if (!(lower < upper))
            throw Error("Legendre dimension requires lower < upper");
    } else {
        if (!(upper > 0.0))
            throw Error("Hermite dimension requires positive standard deviation");
    }
}

DomainScaling::DomainScaling(std::vector<ScaledDimension> dims)
    : dims_(std::move(dims)) {
    for (const auto& d : dims_) d.validate();
}

void DomainScaling::to_standard(std::span<const double> x_phys,
                                std::span<double> x_std) const {
    if (x_phys.size() != dims_.size() || x_std.size() != dims_.size())
        throw DimensionMismatch("to_standard: point size != scaling dims");
    for (std::size_t i = 0; i < dims_.size(); ++i)
        x_std[i] = dims_[i].to_standard(x_phys[i]);
}

void DomainScaling::from_standard(std::span<const double> x_std,
                                  std::span<double> x_phys) const {
    if (x_phys.size() != dims_.size() || x_std.size() != dims_.size())
        throw DimensionMismatch("from_standard: point size != scaling dims");
    for (std::size_t i = 0; i < dims_.size(); ++i)
        x_phys[i] = dims_[i].from_standard(x_std[i]);
}

MultiIndexSet::MultiIndexSet(std::size_t dims, std::vector<int> flat)
    : dims_(dims), flat_(std::move(flat)) {
    if (dims == 0) throw Error("MultiIndexSet requires dims >= 1");
    if (flat_.size() % dims != 0)
        throw DimensionMismatch("MultiIndexSet: flat size not a multiple of dims");
    count_ = flat_.size() / dims;
    for (std::size_t i = 0; i < count_; ++i) {
        for (std::size_t j = 0; j < dims_; ++j)
            if (flat_[i * dims_ + j] < 0)
                throw Error("MultiIndexSet: negative degree");
        max_degree_ = std::max(max_degree_, degree(i));
    }
}

int MultiIndexSet::degree(std::size_t i) const {
    auto a = (*this)[i];
    int d = 0;
    for (int v : a) d += v;
    return d;
}

std::size_t MultiIndexSet::zero_position() const {
    for (std::size_t i = 0; i < count_; ++i) {
        if (degree(i) == 0) return i;
    }
    return npos;
}

MultiIndexSet MultiIndexSet::subset(std::span<const std::size_t> positions) const {
    std::vector<int> flat;
    flat.reserve(positions.size() * dims_);
    for (std::size_t p : positions) {
        if (p >= count_) throw Error("MultiIndexSet::subset: position out of range");
        auto a = (*this)[p];
        flat.insert(flat.end(), a.begin(), a.end());
    }
    return MultiIndexSet(dims_, std::move(flat));
}

std::size_t total_degree_cardinality(std::size_t dims, int max_degree,
                                     std::size_t max_terms) {
    // C(dims + p, p) with overflow guard
    unsigned long long card = 1;
    for (int i = 1; i <= max_degree; ++i) {
        card = card * (dims + i);
        card /= i; // exact: product of i consecutive binomial steps
        if (card > max_terms)
            throw BasisTooLarge("total-degree basis of " + std::to_string(dims) +
                                " dims, degree " + std::to_string(max_degree) +
                                " exceeds the configured maximum of " +
                                std::to_string(max_terms) + " terms");
    }
    return static_cast<std::size_t>(card);
}

namespace {

void compositions_lex(int remaining, std::size_t pos, std::vector<int>& tuple,
                      std::vector<int>& out) {
    if (pos + 1 == tuple.size()) {
        tuple[pos] = remaining;
        out.insert(out.end(), tuple.begin(), tuple.end());
        return;
    }
    for (int v = 0; v <= remaining; ++v) {
        tuple[pos] = v;
        compositions_lex(remaining - v, pos + 1, tuple, out);
    }
}

} // namespace

MultiIndexSet total_degree_index_set(std::size_t dims, int max_degree,
                                     std::size_t max_terms) {
    if (dims < 1) throw Error("total_degree_index_set requires dims >= 1");
    if (max_degree < 0) throw Error("total_degree_index_set requires degree >= 0");
    const std::size_t card = total_degree_cardinality(dims, max_degree, max_terms);

    std::vector<int> flat;
    flat.reserve(card * dims);
    std::vector<int> tuple(dims, 0);
    for (int d = 0; d <= max_degree; ++d)
        compositions_lex(d, 0, tuple, flat);
    return MultiIndexSet(dims, std::move(flat));
}

double multivariate_eval(std::span<const int> alpha, const DomainScaling& scaling,
                         std::span<const double> x_phys) {
    if (alpha.size() != scaling.dims() || x_phys.size() != scaling.dims())
        throw DimensionMismatch("multivariate_eval: alpha/scaling/point dims differ");
    double value = 1.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        const auto& d = scaling.dim(i);
        value *= univariate_eval(d.family, alpha[i], d.to_standard(x_phys[i]));
    }
    return value;
}

double multivariate_partial(std::span<const int> alpha,
                            const DomainScaling& scaling,
                            std::span<const double> x_phys,
                            std::span<const int> orders) {
    if (alpha.size() != scaling.dims() || x_phys.size() != scaling.dims() ||
        orders.size() != scaling.dims())
        throw DimensionMismatch("multivariate_partial: dims differ");
    double value = 1.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        const auto& d = scaling.dim(i);
        const double xs = d.to_standard(x_phys[i]);
        if (orders[i] == 0) {
            value *= univariate_eval(d.family, alpha[i], xs);
        } else {
            value *= univariate_derivative(d.family, alpha[i], orders[i], xs) *
                     std::pow(d.derivative_scale(), orders[i]);
        }
        if (value == 0.0) return 0.0;
    }
    return value;
}

} // namespace pc2
