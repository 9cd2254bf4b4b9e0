#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include <doctest.h>

#include "pc2/errors.hpp"
#include "pc2/postprocess.hpp"
#include "pc2/sampling.hpp"
#include "pc2/surrogate.hpp"

using namespace pc2;

namespace {

/// Model over (x, t, xi) with xi random, total degree 2: the partition
/// fixture discussed in the reduction design.
SurrogateModel xtxi_model(std::uint64_t seed) {
    SurrogateModel m;
    m.scaling = DomainScaling({{PolynomialFamily::LegendreOrthonormal, 0.0, 1.0},
                               {PolynomialFamily::LegendreOrthonormal, 0.0, 1.0},
                               {PolynomialFamily::HermiteOrthonormal, 0.0, 1.0}});
    m.indices = total_degree_index_set(3, 2);
    Rng rng(seed);
    m.coefficients.resize(static_cast<Eigen::Index>(m.indices.size()));
    for (Eigen::Index i = 0; i < m.coefficients.size(); ++i)
        m.coefficients[i] = rng.uniform(-1.0, 1.0);
    return m;
}

std::set<std::vector<int>> det_tuples(const ReducedPce& r, std::size_t group) {
    std::set<std::vector<int>> out;
    const MultiIndexSet& idx = r.conditional[group].indices;
    for (std::size_t i = 0; i < idx.size(); ++i)
        out.insert(std::vector<int>(idx[i].begin(), idx[i].end()));
    return out;
}

std::size_t find_tuple(const MultiIndexSet& set, const std::vector<int>& want) {
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto t = set[i];
        if (std::equal(t.begin(), t.end(), want.begin(), want.end())) return i;
    }
    REQUIRE(false);
    return 0;
}

} // namespace

TEST_CASE("reduction partitions a degree-2 (x,t,xi) basis as expected") {
    const SurrogateModel m = xtxi_model(1);
    const std::vector<std::size_t> random{2};
    const ReducedPce r = reduce(m, random);

    REQUIRE(r.rand_indices.size() == 3); // xi^0, xi^1, xi^2
    REQUIRE(r.conditional.size() == 3);
    CHECK(r.rand_indices[r.zero_pos][0] == 0);

    std::size_t g0 = r.zero_pos, g1 = 0, g2 = 0;
    for (std::size_t g = 0; g < 3; ++g) {
        if (r.rand_indices[g][0] == 1) g1 = g;
        if (r.rand_indices[g][0] == 2) g2 = g;
    }

    const std::set<std::vector<int>> want0{{0, 0}, {0, 1}, {1, 0},
                                           {1, 1}, {0, 2}, {2, 0}};
    const std::set<std::vector<int>> want1{{0, 0}, {0, 1}, {1, 0}};
    const std::set<std::vector<int>> want2{{0, 0}};
    CHECK(det_tuples(r, g0) == want0);
    CHECK(det_tuples(r, g1) == want1);
    CHECK(det_tuples(r, g2) == want2);

    // every original term lands in exactly one group
    std::size_t total = 0;
    for (const auto& c : r.conditional) total += c.indices.size();
    CHECK(total == m.indices.size());
}

TEST_CASE("reduced model recombines to the full surrogate pointwise") {
    const SurrogateModel m = xtxi_model(7);
    const std::vector<std::size_t> random{2};
    const ReducedPce r = reduce(m, random);

    Rng rng(55);
    for (int trial = 0; trial < 25; ++trial) {
        const std::vector<double> x_det{rng.uniform01(), rng.uniform01()};
        const double xi = rng.uniform(-2.0, 2.0);
        const Eigen::VectorXd cond = conditional_coefficients(r, x_det);

        double recombined = 0.0;
        for (std::size_t g = 0; g < r.rand_indices.size(); ++g) {
            const std::vector<double> z{xi};
            recombined +=
                cond[static_cast<Eigen::Index>(g)] *
                multivariate_eval(r.rand_indices[g], r.rand_scaling, z);
        }
        const std::vector<double> full{x_det[0], x_det[1], xi};
        CHECK(recombined == doctest::Approx(m.evaluate(full)).epsilon(1e-11));
    }
}

TEST_CASE("conditional moments match surrogate Monte Carlo") {
    const SurrogateModel m = xtxi_model(3);
    const std::vector<std::size_t> random{2};
    const ReducedPce r = reduce(m, random);
    const std::vector<double> x_det{0.3, 0.7};
    const MomentEstimate mom = conditional_moments(r, x_det);

    const std::size_t n = 400000;
    Rng rng(888);
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::vector<double> x{0.3, 0.7, rng.standard_normal()};
        const double v = m.evaluate(x);
        sum += v;
        sumsq += v * v;
    }
    const double mc_mean = sum / static_cast<double>(n);
    const double mc_var =
        sumsq / static_cast<double>(n) - mc_mean * mc_mean;
    // xi^2 terms give the output a chi-square tail; 3-sigma MC bands
    const double se_mean = std::sqrt(mc_var / static_cast<double>(n));
    CHECK(std::abs(mom.mean - mc_mean) < 3.5 * se_mean);
    CHECK(std::abs(mom.variance - mc_var) / mc_var < 0.02);
}

TEST_CASE("additive two-factor model has exact Sobol fractions") {
    // u = a * phi1(z1) + b * phi1(z2): V = a^2 + b^2, S1 = a^2/V, S2 = b^2/V.
    SurrogateModel m;
    m.scaling = DomainScaling({{PolynomialFamily::LegendreOrthonormal, 0.0, 1.0},
                               {PolynomialFamily::HermiteOrthonormal, 0.0, 1.0},
                               {PolynomialFamily::HermiteOrthonormal, 0.0, 1.0}});
    m.indices = total_degree_index_set(3, 1);
    m.coefficients = Eigen::VectorXd::Zero(4);
    m.coefficients[static_cast<Eigen::Index>(find_tuple(m.indices, {0, 0, 0}))] = 5.0;
    m.coefficients[static_cast<Eigen::Index>(find_tuple(m.indices, {0, 0, 1}))] = 3.0;
    m.coefficients[static_cast<Eigen::Index>(find_tuple(m.indices, {0, 1, 0}))] = 4.0;
    const std::vector<std::size_t> random{1, 2};
    const ReducedPce r = reduce(m, random);
    const std::vector<double> x_det{0.5};

    const Eigen::VectorXd s1 = sobol_first_order(r, x_det);
    const Eigen::VectorXd st = sobol_total(r, x_det);
    REQUIRE(s1.size() == 2);
    CHECK(s1[0] == doctest::Approx(16.0 / 25.0).epsilon(1e-12));
    CHECK(s1[1] == doctest::Approx(9.0 / 25.0).epsilon(1e-12));
    CHECK(st[0] == doctest::Approx(s1[0]).epsilon(1e-12));
    CHECK(st[1] == doctest::Approx(s1[1]).epsilon(1e-12));
}

TEST_CASE("interaction terms appear in total but not first-order indices") {
    SurrogateModel m;
    m.scaling = DomainScaling({{PolynomialFamily::LegendreOrthonormal, 0.0, 1.0},
                               {PolynomialFamily::HermiteOrthonormal, 0.0, 1.0},
                               {PolynomialFamily::HermiteOrthonormal, 0.0, 1.0}});
    m.indices = total_degree_index_set(3, 2);
    m.coefficients =
        Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m.indices.size()));
    // main effect on z2 plus a z1 z2 interaction, flat in the spatial dim
    m.coefficients[static_cast<Eigen::Index>(find_tuple(m.indices, {0, 0, 1}))] = 1.0;
    m.coefficients[static_cast<Eigen::Index>(find_tuple(m.indices, {0, 1, 1}))] = 2.0;
    const ReducedPce r = reduce(m, std::vector<std::size_t>{1, 2});
    const std::vector<double> x_det{0.4};
    const Eigen::VectorXd s1 = sobol_first_order(r, x_det);
    const Eigen::VectorXd st = sobol_total(r, x_det);
    const double v = 1.0 + 4.0;
    CHECK(s1[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(s1[1] == doctest::Approx(1.0 / v).epsilon(1e-12));
    CHECK(st[0] == doctest::Approx(4.0 / v).epsilon(1e-12));
    CHECK(st[1] == doctest::Approx(1.0).epsilon(1e-12));

    // first-order never exceeds total, both within [0,1]
    for (int j = 0; j < 2; ++j) {
        CHECK(s1[j] >= 0.0);
        CHECK(st[j] <= 1.0 + 1e-12);
        CHECK(s1[j] <= st[j] + 1e-12);
    }
}

TEST_CASE("Sobol indices on a constant conditional throw ZeroVariance") {
    SurrogateModel m;
    m.scaling = DomainScaling({{PolynomialFamily::LegendreOrthonormal, 0.0, 1.0},
                               {PolynomialFamily::HermiteOrthonormal, 0.0, 1.0}});
    m.indices = total_degree_index_set(2, 1);
    m.coefficients = Eigen::VectorXd::Zero(3);
    m.coefficients[0] = 2.0;
    const ReducedPce r = reduce(m, std::vector<std::size_t>{1});
    CHECK_THROWS_AS(sobol_first_order(r, std::vector<double>{0.5}), ZeroVariance);
}

TEST_CASE("PDF estimate integrates to one and tracks a known density") {
    // u = phi1(z) = z for standard normal z: the PDF is standard normal,
    // independent of the spatial coordinate.
    SurrogateModel m;
    m.scaling = DomainScaling({{PolynomialFamily::LegendreOrthonormal, 0.0, 1.0},
                               {PolynomialFamily::HermiteOrthonormal, 0.0, 1.0}});
    m.indices = total_degree_index_set(2, 1);
    m.coefficients = Eigen::VectorXd::Zero(3);
    m.coefficients[static_cast<Eigen::Index>(find_tuple(m.indices, {0, 1}))] = 1.0;
    const ReducedPce r = reduce(m, std::vector<std::size_t>{1});
    const PdfEstimate pdf = pdf_estimate(r, std::vector<double>{0.5}, 60000, 42);

    REQUIRE(pdf.grid.size() == pdf.density.size());
    REQUIRE(pdf.samples.size() == 60000);
    double integral = 0.0;
    for (Eigen::Index i = 1; i < pdf.grid.size(); ++i)
        integral += 0.5 * (pdf.density[i] + pdf.density[i - 1]) *
                    (pdf.grid[i] - pdf.grid[i - 1]);
    CHECK(integral == doctest::Approx(1.0).epsilon(0.02));

    // compare against the standard normal density near the mode
    const auto normal_pdf = [](double x) {
        return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    };
    for (const double x : {-1.0, 0.0, 1.0}) {
        // nearest grid node
        Eigen::Index best = 0;
        for (Eigen::Index i = 0; i < pdf.grid.size(); ++i)
            if (std::abs(pdf.grid[i] - x) < std::abs(pdf.grid[best] - x))
                best = i;
        CHECK(pdf.density[best] ==
              doctest::Approx(normal_pdf(pdf.grid[best])).epsilon(0.05));
    }
}

TEST_CASE("reduce validates the random dimension list") {
    const SurrogateModel m = xtxi_model(2);
    CHECK_THROWS_AS(reduce(m, std::vector<std::size_t>{9}), DimensionMismatch);
    CHECK_THROWS_AS(reduce(m, std::vector<std::size_t>{2, 2}), DimensionMismatch);
}
