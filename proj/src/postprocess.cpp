#include "pc2/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "pc2/errors.hpp"
#include "pc2/sampling.hpp"

namespace pc2 {

namespace {

int tuple_degree(const std::vector<int>& t) {
    return std::accumulate(t.begin(), t.end(), 0);
}

bool graded_lex_less(const std::vector<int>& a, const std::vector<int>& b) {
    const int da = tuple_degree(a), db = tuple_degree(b);
    if (da != db) return da < db;
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

} // namespace

ReducedPce reduce(const SurrogateModel& model,
                  std::span<const std::size_t> random_dims) {
    model.validate();
    const std::size_t m = model.dims();
    std::vector<bool> is_rand(m, false);
    for (std::size_t d : random_dims) {
        if (d >= m)
            throw DimensionMismatch("reduce: random dimension out of range");
        if (is_rand[d])
            throw DimensionMismatch("reduce: duplicate random dimension");
        is_rand[d] = true;
    }
    if (random_dims.empty())
        throw ConfigError("reduce: at least one random dimension required");
    if (random_dims.size() == m)
        throw ConfigError("reduce: at least one deterministic dimension required");

    ReducedPce out;
    for (std::size_t d = 0; d < m; ++d)
        (is_rand[d] ? out.rand_dims : out.det_dims).push_back(d);

    std::vector<ScaledDimension> det_sd, rand_sd;
    for (std::size_t d : out.det_dims) det_sd.push_back(model.scaling.dim(d));
    for (std::size_t d : out.rand_dims) rand_sd.push_back(model.scaling.dim(d));
    out.det_scaling = DomainScaling(det_sd);
    out.rand_scaling = DomainScaling(rand_sd);

    // Group terms by their random sub-tuple.
    struct Group {
        std::vector<int> det_flat;
        std::vector<double> coeffs;
    };
    std::map<std::vector<int>, Group> groups;
    std::vector<int> ax(out.det_dims.size()), axi(out.rand_dims.size());
    for (std::size_t k = 0; k < model.terms(); ++k) {
        const auto alpha = model.indices[k];
        for (std::size_t i = 0; i < out.det_dims.size(); ++i)
            ax[i] = alpha[out.det_dims[i]];
        for (std::size_t i = 0; i < out.rand_dims.size(); ++i)
            axi[i] = alpha[out.rand_dims[i]];
        Group& g = groups[axi];
        g.det_flat.insert(g.det_flat.end(), ax.begin(), ax.end());
        g.coeffs.push_back(model.coefficients[static_cast<Eigen::Index>(k)]);
    }
    // The zero tuple carries the conditional mean; keep it present even
    // when every surviving term has a random component.
    groups.try_emplace(std::vector<int>(out.rand_dims.size(), 0));

    std::vector<std::vector<int>> order;
    order.reserve(groups.size());
    for (const auto& [tuple, group] : groups) order.push_back(tuple);
    std::sort(order.begin(), order.end(), graded_lex_less);

    std::vector<int> rand_flat;
    rand_flat.reserve(order.size() * out.rand_dims.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
        const std::vector<int>& tuple = order[k];
        if (tuple_degree(tuple) == 0) out.zero_pos = k;
        rand_flat.insert(rand_flat.end(), tuple.begin(), tuple.end());

        Group& g = groups[tuple];
        SurrogateModel cond;
        cond.scaling = out.det_scaling;
        cond.indices = MultiIndexSet(out.det_dims.size(), std::move(g.det_flat));
        cond.coefficients = Eigen::Map<Eigen::VectorXd>(
            g.coeffs.data(), static_cast<Eigen::Index>(g.coeffs.size()));
        out.conditional.push_back(std::move(cond));
    }
    out.rand_indices = MultiIndexSet(out.rand_dims.size(), std::move(rand_flat));
    return out;
}

Eigen::VectorXd conditional_coefficients(const ReducedPce& reduced,
                                         std::span<const double> x_det) {
    if (x_det.size() != reduced.det_dims.size())
        throw DimensionMismatch("conditional_coefficients: deterministic point size mismatch");
    Eigen::VectorXd c(static_cast<Eigen::Index>(reduced.conditional.size()));
    for (std::size_t k = 0; k < reduced.conditional.size(); ++k)
        c[static_cast<Eigen::Index>(k)] = reduced.conditional[k].evaluate(x_det);
    return c;
}

MomentEstimate conditional_moments(const ReducedPce& reduced,
                                   std::span<const double> x_det) {
    const Eigen::VectorXd c = conditional_coefficients(reduced, x_det);
    MomentEstimate m;
    m.mean = c[static_cast<Eigen::Index>(reduced.zero_pos)];
    for (Eigen::Index k = 0; k < c.size(); ++k)
        if (static_cast<std::size_t>(k) != reduced.zero_pos)
            m.variance += c[k] * c[k];
    return m;
}

namespace {

Eigen::VectorXd sobol_indices(const ReducedPce& reduced,
                              std::span<const double> x_det, bool total) {
    const Eigen::VectorXd c = conditional_coefficients(reduced, x_det);
    double var = 0.0;
    for (Eigen::Index k = 0; k < c.size(); ++k)
        if (static_cast<std::size_t>(k) != reduced.zero_pos) var += c[k] * c[k];
    if (var <= 0.0)
        throw ZeroVariance("sobol indices: conditional variance is zero at this point");

    const std::size_t r = reduced.rand_dims.size();
    Eigen::VectorXd s = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(r));
    for (std::size_t k = 0; k < reduced.rand_indices.size(); ++k) {
        if (k == reduced.zero_pos) continue;
        const auto tuple = reduced.rand_indices[k];
        const double c2 = c[static_cast<Eigen::Index>(k)] * c[static_cast<Eigen::Index>(k)];
        for (std::size_t i = 0; i < r; ++i) {
            if (tuple[i] == 0) continue;
            if (total) {
                s[static_cast<Eigen::Index>(i)] += c2;
            } else {
                bool only_i = true;
                for (std::size_t j = 0; j < r; ++j)
                    if (j != i && tuple[j] != 0) { only_i = false; break; }
                if (only_i) s[static_cast<Eigen::Index>(i)] += c2;
            }
        }
    }
    return s / var;
}

} // namespace

Eigen::VectorXd sobol_first_order(const ReducedPce& reduced,
                                  std::span<const double> x_det) {
    return sobol_indices(reduced, x_det, false);
}

Eigen::VectorXd sobol_total(const ReducedPce& reduced,
                            std::span<const double> x_det) {
    return sobol_indices(reduced, x_det, true);
}

Eigen::MatrixXd sample_standard_inputs(const DomainScaling& rand_scaling,
                                       std::size_t n_samples, std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t m = rand_scaling.dims();
    Eigen::MatrixXd z(static_cast<Eigen::Index>(n_samples),
                      static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < n_samples; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            const bool gaussian = rand_scaling.dim(j).family ==
                                  PolynomialFamily::HermiteOrthonormal;
            z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                gaussian ? rng.standard_normal() : rng.uniform(-1.0, 1.0);
        }
    return z;
}

PdfEstimate pdf_estimate(const ReducedPce& reduced, std::span<const double> x_det,
                         std::size_t n_samples, std::uint64_t seed,
                         std::size_t n_grid) {
    if (n_samples < 2) throw Error("pdf_estimate: need at least two samples");
    if (n_grid < 2) throw Error("pdf_estimate: need at least two grid points");

    const Eigen::VectorXd c = conditional_coefficients(reduced, x_det);
    const Eigen::MatrixXd z = sample_standard_inputs(reduced.rand_scaling,
                                                     n_samples, seed);
    const Eigen::MatrixXd x = unstandardize(z, reduced.rand_scaling);
    const Eigen::MatrixXd psi =
        build_design_matrix(reduced.rand_indices, reduced.rand_scaling, x);

    PdfEstimate out;
    out.samples = psi * c;

    const double n = static_cast<double>(n_samples);
    const double mean = out.samples.mean();
    const double sd = std::sqrt((out.samples.array() - mean).square().sum() / (n - 1.0));

    std::vector<double> sorted(out.samples.data(), out.samples.data() + n_samples);
    std::sort(sorted.begin(), sorted.end());
    const auto quantile = [&](double q) {
        const double pos = q * (n - 1.0);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, n_samples - 1);
        const double frac = pos - static_cast<double>(lo);
        return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
    };
    const double iqr = quantile(0.75) - quantile(0.25);

    double spread = std::min(sd, iqr / 1.34);
    if (spread <= 0.0) spread = std::max(sd, iqr / 1.34);
    if (spread <= 0.0)
        throw ZeroVariance("pdf_estimate: output is constant over the random inputs");
    out.bandwidth = 0.9 * spread * std::pow(n, -0.2);

    const double lo = sorted.front() - 3.0 * out.bandwidth;
    const double hi = sorted.back() + 3.0 * out.bandwidth;
    out.grid.resize(static_cast<Eigen::Index>(n_grid));
    out.density.resize(static_cast<Eigen::Index>(n_grid));
    const double norm = 1.0 / (n * out.bandwidth * std::sqrt(2.0 * M_PI));
    for (std::size_t g = 0; g < n_grid; ++g) {
        const double y = lo + (hi - lo) * static_cast<double>(g) /
                                  static_cast<double>(n_grid - 1);
        double acc = 0.0;
        for (std::size_t i = 0; i < n_samples; ++i) {
            const double t = (y - sorted[i]) / out.bandwidth;
            acc += std::exp(-0.5 * t * t);
        }
        out.grid[static_cast<Eigen::Index>(g)] = y;
        out.density[static_cast<Eigen::Index>(g)] = norm * acc;
    }
    return out;
}

} // namespace pc2
