#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include <doctest.h>

#include "pc2/sampling.hpp"

using namespace pc2;

TEST_CASE("uniform01 stays in range and reproduces by seed") {
    Rng a(123), b(123), c(124);
    bool all_same = true;
    for (int i = 0; i < 1000; ++i) {
        const double x = a.uniform01();
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
        const double y = b.uniform01();
        CHECK(x == y);
        all_same = all_same && (x == c.uniform01());
    }
    CHECK_FALSE(all_same);
}

TEST_CASE("permutation is a bijection") {
    Rng rng(5);
    const auto perm = rng.permutation(257);
    std::set<std::uint32_t> seen(perm.begin(), perm.end());
    CHECK(seen.size() == 257);
    CHECK(*seen.begin() == 0);
    CHECK(*seen.rbegin() == 256);
}

TEST_CASE("inverse normal CDF hits tabulated quantiles") {
    // Values from standard statistical tables.
    CHECK(inverse_normal_cdf(0.5) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(inverse_normal_cdf(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-9));
    CHECK(inverse_normal_cdf(0.84134474606854293) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(inverse_normal_cdf(0.0013498980316300933) == doctest::Approx(-3.0).epsilon(1e-9));
}

TEST_CASE("substream seeds differ by tag and reproduce") {
    const std::uint64_t root = 99;
    CHECK(derive_stream_seed(root, "ED") == derive_stream_seed(root, "ED"));
    CHECK(derive_stream_seed(root, "ED") != derive_stream_seed(root, "IC"));
    CHECK(derive_stream_seed(root, "BC0") != derive_stream_seed(root, "BC1"));
    CHECK(derive_stream_seed(1, "ED") != derive_stream_seed(2, "ED"));
}

TEST_CASE("LHS stratification: one point per stratum per dimension") {
    SampleSpec spec;
    spec.n_points = 64;
    spec.seed = 2024;
    spec.dims = {SampleDim::uniform(0.0, 1.0), SampleDim::uniform(-2.0, 3.0)};
    const Eigen::MatrixXd pts = lhs_sample(spec);
    REQUIRE(pts.rows() == 64);
    REQUIRE(pts.cols() == 2);

    for (int d = 0; d < 2; ++d) {
        const double lo = d == 0 ? 0.0 : -2.0;
        const double hi = d == 0 ? 1.0 : 3.0;
        std::vector<int> hits(64, 0);
        for (int i = 0; i < 64; ++i) {
            const double u = (pts(i, d) - lo) / (hi - lo);
            CHECK(u >= 0.0);
            CHECK(u < 1.0);
            hits[static_cast<int>(u * 64)]++;
        }
        CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
    }
}

TEST_CASE("LHS gaussian dimension: strata in probability space") {
    SampleSpec spec;
    spec.n_points = 50;
    spec.seed = 7;
    spec.dims = {SampleDim::gaussian(1.0, 2.0)};
    const Eigen::MatrixXd pts = lhs_sample(spec);
    std::vector<int> hits(50, 0);
    for (int i = 0; i < 50; ++i) {
        // map back to the uniform stratum through the standard normal CDF
        const double z = (pts(i, 0) - 1.0) / 2.0;
        const double u = 0.5 * std::erfc(-z / std::sqrt(2.0));
        hits[std::min(49, static_cast<int>(u * 50))]++;
    }
    CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
}

TEST_CASE("LHS reproduces by seed and changes with it") {
    SampleSpec spec;
    spec.n_points = 16;
    spec.seed = 11;
    spec.dims = {SampleDim::uniform(0.0, 1.0), SampleDim::gaussian(0.0, 1.0)};
    const Eigen::MatrixXd a = lhs_sample(spec);
    const Eigen::MatrixXd b = lhs_sample(spec);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
    spec.seed = 12;
    const Eigen::MatrixXd c = lhs_sample(spec);
    CHECK((a - c).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("standardize/unstandardize are inverse maps") {
    const DomainScaling scaling({{PolynomialFamily::LegendreOrthonormal, 2.0, 6.0},
                                 {PolynomialFamily::HermiteOrthonormal, -1.0, 0.5}});
    Eigen::MatrixXd pts(3, 2);
    pts << 2.0, -1.0, 4.0, 0.0, 6.0, 1.0;
    const Eigen::MatrixXd std_pts = standardize(pts, scaling);
    CHECK(std_pts(0, 0) == doctest::Approx(-1.0));
    CHECK(std_pts(2, 0) == doctest::Approx(1.0));
    CHECK(std_pts(1, 1) == doctest::Approx(2.0));
    const Eigen::MatrixXd back = unstandardize(std_pts, scaling);
    CHECK((back - pts).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("insert_fixed_column places the pinned coordinate") {
    Eigen::MatrixXd pts(2, 2);
    pts << 1.0, 2.0, 3.0, 4.0;
    const Eigen::MatrixXd out = insert_fixed_column(pts, 1, 9.0);
    REQUIRE(out.cols() == 3);
    CHECK(out(0, 0) == 1.0);
    CHECK(out(0, 1) == 9.0);
    CHECK(out(0, 2) == 2.0);
    CHECK(out(1, 1) == 9.0);
}
