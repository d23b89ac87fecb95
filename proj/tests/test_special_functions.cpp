#include <doctest.h>

#include <cmath>

#include "copreg/rng.hpp"
#include "copreg/special_functions.hpp"
#include "test_oracles.hpp"

using namespace copreg;

TEST_CASE("norm_pdf values and symmetry") {
    CHECK(norm_pdf(0.0) == doctest::Approx(0.3989422804014327).epsilon(1e-12));
    CHECK(norm_pdf(1.0) == doctest::Approx(0.2419707245191434).epsilon(1e-12));
    for (double z : {0.3, 1.7, 4.4, 11.0}) CHECK(norm_pdf(z) == norm_pdf(-z));
    CHECK(norm_pdf(pos_inf) == 0.0);
    CHECK(norm_pdf(2.0) > 0.0);
}

TEST_CASE("norm_cdf against the series oracle") {
    CHECK(norm_cdf(0.0) == 0.5);
    CHECK(norm_cdf(1.96) == doctest::Approx(0.9750021048517796).epsilon(1e-13));
    CHECK(norm_cdf(neg_inf) == 0.0);
    CHECK(norm_cdf(pos_inf) == 1.0);
    for (double z = -6.0; z <= 6.0; z += 0.0625) {
        const double oracle = static_cast<double>(testutil::phi_series_cdf(z));
        CHECK(std::fabs(norm_cdf(z) - oracle) < 1e-12);
        CHECK(std::fabs((1.0 - norm_cdf(z)) - norm_cdf(-z)) < 1e-12);
    }
    // monotone on a dense grid
    double prev = 0.0;
    for (double z = -38.0; z <= 38.0; z += 0.01) {
        const double v = norm_cdf(z);
        CHECK(v >= prev);
        prev = v;
    }
    CHECK(norm_cdf(-38.0) == 0.0);  // documented underflow point
    CHECK(norm_cdf(-37.0) > 0.0);
}

TEST_CASE("norm_quantile roundtrips and frozen values") {
    CHECK(norm_quantile(0.5) == 0.0);
    CHECK(norm_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-10));
    for (double x = -6.0; x <= 6.0; x += 0.25) {
        CHECK(std::fabs(norm_quantile(norm_cdf(x)) - x) < 1e-8);
    }
    for (double x = -3.0; x <= 3.0; x += 1.0) {
        CHECK(std::fabs(norm_quantile(norm_cdf(x)) - x) < 1e-9);
    }
    // strictly increasing
    double prev = -1e30;
    for (double p = 1e-10; p < 1.0; p += 0.001) {
        const double v = norm_quantile(p);
        CHECK(v > prev);
        prev = v;
    }
    CHECK_THROWS_AS(norm_quantile(0.0), std::domain_error);
    CHECK_THROWS_AS(norm_quantile(1.0), std::domain_error);
    CHECK_THROWS_AS(norm_quantile(-0.2), std::domain_error);
}

TEST_CASE("truncated normal moments: frozen and closed-form cases") {
    CHECK(trunc_norm_mean({-2.0, 2.0}) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(trunc_norm_mean({0.0, pos_inf}) ==
          doctest::Approx(0.7978845608028654).epsilon(1e-12));
    CHECK(trunc_norm_mean({1.0, 2.0}) == doctest::Approx(1.3831690466).epsilon(1e-9));
    CHECK(trunc_norm_second_moment({neg_inf, pos_inf}) == doctest::Approx(1.0));
    CHECK(trunc_norm_second_moment({0.0, pos_inf}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(trunc_norm_second_moment({-1.0, 1.0}) ==
          doctest::Approx(0.2911250947727932).epsilon(1e-10));
    // value strictly inside the interval
    const double m = trunc_norm_mean({1.0, 2.0});
    CHECK(m > 1.0);
    CHECK(m < 2.0);
    CHECK_THROWS_AS(trunc_norm_mean({40.0, 41.0}), degenerate_interval_error);
    CHECK_THROWS_AS(trunc_norm_second_moment({40.0, 41.0}), degenerate_interval_error);
}

TEST_CASE("truncated moments agree with the integration oracle") {
    Rng rng(42);
    int checked = 0;
    while (checked < 100) {
        double a = -4.0 + 8.0 * rng.uniform();
        double b = -4.0 + 8.0 * rng.uniform();
        if (b < a) std::swap(a, b);
        if (b - a < 1e-3) continue;
        const Interval iv{a, b};
        const double mass =
            testutil::integrate([](double z) { return testutil::norm_pdf_oracle(z); }, a, b);
        if (mass < 1e-12) continue;
        const double m1 =
            testutil::integrate([](double z) { return z * testutil::norm_pdf_oracle(z); }, a,
                                b) /
            mass;
        const double m2 =
            testutil::integrate(
                [](double z) { return z * z * testutil::norm_pdf_oracle(z); }, a, b) /
            mass;
        CHECK(std::fabs(trunc_norm_mean(iv) - m1) < 1e-8);
        CHECK(std::fabs(trunc_norm_second_moment(iv) - m2) < 1e-8);
        // variance nonnegativity
        CHECK(trunc_norm_second_moment(iv) >= trunc_norm_mean(iv) * trunc_norm_mean(iv));
        ++checked;
    }
}

TEST_CASE("truncated moments remain sane in far tails") {
    // mass below 1e-10 exercises the log-space path
    const Interval iv{7.0, 7.5};
    const double z = trunc_norm_mean(iv);
    CHECK(z > 7.0);
    CHECK(z < 7.5);
    const double x2 = trunc_norm_second_moment(iv);
    CHECK(x2 >= z * z);
    CHECK(x2 < 7.5 * 7.5);
    // mirrored left tail
    CHECK(trunc_norm_mean({-7.5, -7.0}) == doctest::Approx(-z).epsilon(1e-12));
    CHECK(trunc_norm_second_moment({-7.5, -7.0}) == doctest::Approx(x2).epsilon(1e-12));
}
