#include <cmath>
#include <vector>

#include <doctest.h>

#include "pc2/errors.hpp"
#include "pc2/randomfield.hpp"

using namespace pc2;

namespace {

double trapezoid_inner(const Eigen::VectorXd& grid, const Eigen::VectorXd& f,
                       const Eigen::VectorXd& g) {
    double s = 0.0;
    for (Eigen::Index i = 1; i < grid.size(); ++i)
        s += 0.5 * (f[i] * g[i] + f[i - 1] * g[i - 1]) * (grid[i] - grid[i - 1]);
    return s;
}

} // namespace

TEST_CASE("eigenvalues are positive, descending, and trace-bounded") {
    const double sigma = 0.3, length = 2.0, lc = 0.5;
    const KlExpansion kl =
        kl_expand(exponential_covariance(sigma, lc), length, 10, 257);
    REQUIRE(kl.n_modes() == 10);
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(kl.eigenvalues[static_cast<Eigen::Index>(i)] > 0.0);
        if (i > 0)
            CHECK(kl.eigenvalues[static_cast<Eigen::Index>(i)] <=
                  kl.eigenvalues[static_cast<Eigen::Index>(i - 1)]);
    }
    // trace identity: sum of all eigenvalues equals sigma^2 * L; the
    // truncation captures a fraction of it, monotone in the mode count
    CHECK(kl.eigenvalues.sum() < sigma * sigma * length + 1e-9);
    CHECK(kl.captured_variance ==
          doctest::Approx(kl.eigenvalues.sum() / (sigma * sigma * length))
              .epsilon(1e-12));
    const KlExpansion kl4 =
        kl_expand(exponential_covariance(sigma, lc), length, 4, 257);
    CHECK(kl4.captured_variance < kl.captured_variance);
    CHECK(kl.captured_variance > 0.85); // exponential kernel decays fast
    CHECK(kl.captured_variance <= 1.0 + 1e-12);
}

TEST_CASE("modes are orthonormal in L2 on the interval") {
    const KlExpansion kl =
        kl_expand(exponential_covariance(1.0, 0.7), 1.0, 6, 513);
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = i; j < 6; ++j) {
            const double inner = trapezoid_inner(
                kl.grid, kl.modes.col(static_cast<Eigen::Index>(i)),
                kl.modes.col(static_cast<Eigen::Index>(j)));
            CHECK(std::abs(inner - (i == j ? 1.0 : 0.0)) < 1e-8);
        }
}

TEST_CASE("retained modes reproduce the covariance kernel") {
    // With nearly all the variance captured, sum_i lambda_i f_i(x) f_i(y)
    // approximates C(x, y).
    const double sigma = 0.5, length = 1.0, lc = 0.8;
    const CovarianceFn cov = exponential_covariance(sigma, lc);
    const KlExpansion kl = kl_expand(cov, length, 25, 513);
    REQUIRE(kl.captured_variance > 0.98);

    for (const double x : {0.2, 0.5, 0.9}) {
        for (const double y : {0.1, 0.5, 0.7}) {
            // nearest grid nodes
            Eigen::Index ix = 0, iy = 0;
            for (Eigen::Index i = 0; i < kl.grid.size(); ++i) {
                if (std::abs(kl.grid[i] - x) < std::abs(kl.grid[ix] - x)) ix = i;
                if (std::abs(kl.grid[i] - y) < std::abs(kl.grid[iy] - y)) iy = i;
            }
            double sum = 0.0;
            for (std::size_t m = 0; m < kl.n_modes(); ++m)
                sum += kl.eigenvalues[static_cast<Eigen::Index>(m)] *
                       kl.modes(ix, static_cast<Eigen::Index>(m)) *
                       kl.modes(iy, static_cast<Eigen::Index>(m));
            CHECK(sum == doctest::Approx(cov(kl.grid[ix], kl.grid[iy]))
                             .epsilon(0.05));
        }
    }
}

TEST_CASE("evaluate composes mean and weighted modes") {
    const KlExpansion kl =
        kl_expand(exponential_covariance(0.1, 0.4), 1.0, 3, 129, 1.0);
    const std::vector<double> xi{0.5, -1.0, 2.0};
    const double x = 0.37;
    // manual recomposition with linear interpolation onto x
    Eigen::Index i0 = 0;
    while (i0 + 1 < kl.grid.size() && kl.grid[i0 + 1] <= x) ++i0;
    const double w =
        (x - kl.grid[i0]) / (kl.grid[i0 + 1] - kl.grid[i0]);
    double want = 1.0;
    for (std::size_t m = 0; m < 3; ++m) {
        const double mode_x =
            (1.0 - w) * kl.modes(i0, static_cast<Eigen::Index>(m)) +
            w * kl.modes(i0 + 1, static_cast<Eigen::Index>(m));
        want += std::sqrt(kl.eigenvalues[static_cast<Eigen::Index>(m)]) *
                mode_x * xi[m];
    }
    CHECK(kl.evaluate(x, xi) == doctest::Approx(want).epsilon(1e-10));
}

TEST_CASE("mean field with zero coordinates") {
    const KlExpansion kl =
        kl_expand(exponential_covariance(0.05, 0.5), 10.0, 7, 257, 1.0);
    const std::vector<double> zero(7, 0.0);
    CHECK(kl.evaluate(2.5, zero) == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("invalid expansion requests are rejected") {
    CHECK_THROWS_AS(kl_expand(exponential_covariance(1.0, 0.5), 1.0, 0, 65),
                    ConfigError);
    CHECK_THROWS_AS(kl_expand(exponential_covariance(1.0, 0.5), 1.0, 100, 65),
                    ConfigError);
    CHECK_THROWS_AS(kl_expand(exponential_covariance(1.0, 0.5), -1.0, 3, 65),
                    ConfigError);
}
