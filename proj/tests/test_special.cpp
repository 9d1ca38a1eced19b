#include <gtest/gtest.h>

#include "tcrank/special.hpp"
#include "generators.hpp"

#include <numbers>

using namespace tcrank;

TEST(FCdf, TrivialValues) {
    EXPECT_EQ(f_cdf(0, 3, 5), 0);
    for (double d : { 1.0, 2.0, 7.0, 40.0 }) {
        EXPECT_NEAR(f_cdf(1, d, d), 0.5, 1e-10);
    }
}

TEST(FCdf, ReciprocalSymmetry) {
    // P(F(a, b) <= x) = 1 - P(F(b, a) <= 1/x).
    gen::Source src(3);
    for (int rep = 0; rep < 50; ++rep) {
        const double a = src.uniform(0.5, 30), b = src.uniform(0.5, 30), x = src.uniform(0.01, 10);
        EXPECT_NEAR(f_cdf(x, a, b), 1 - f_cdf(1 / x, b, a), 1e-10);
    }
}

TEST(FCdf, InfiniteDenominatorIsChiSquared) {
    // F(2, inf) * 2 is chi-squared with 2 df, whose CDF is 1 - exp(-y / 2).
    EXPECT_NEAR(f_cdf(1.5, 2, std::numeric_limits<double>::infinity()), 1 - std::exp(-1.5), 1e-10);
}

TEST(FCdf, DomainErrors) {
    EXPECT_THROW(f_cdf(-1, 2, 3), DomainError);
    EXPECT_THROW(f_cdf(1, 0, 3), DomainError);
    EXPECT_THROW(f_cdf(1, 2, -1), DomainError);
}

TEST(Polygamma, KnownConstants) {
    EXPECT_NEAR(digamma(1), -std::numbers::egamma, 1e-10);
    EXPECT_NEAR(trigamma(1), std::numbers::pi * std::numbers::pi / 6, 1e-10);
    EXPECT_NEAR(trigamma_inverse(std::numbers::pi * std::numbers::pi / 6), 1, 1e-8);
    EXPECT_THROW(digamma(0), DomainError);
    EXPECT_THROW(trigamma(-1), DomainError);
}

TEST(Polygamma, Recurrences) {
    gen::Source src(4);
    for (int rep = 0; rep < 50; ++rep) {
        const double x = src.uniform(0.05, 50);
        EXPECT_NEAR(digamma(x + 1), digamma(x) + 1 / x, 1e-10 * std::max(1.0, 1 / x));
        EXPECT_NEAR(trigamma(x + 1), trigamma(x) - 1 / (x * x), 1e-10 * std::max(1.0, 1 / (x * x)));
        EXPECT_NEAR(trigamma_inverse(trigamma(x)), x, 1e-6 * x);
    }
}

TEST(StudentT, QuantileInvertsTail) {
    gen::Source src(5);
    for (int rep = 0; rep < 50; ++rep) {
        const double df = src.uniform(1, 60), p = src.uniform(1e-6, 0.49);
        EXPECT_NEAR(t_upper_tail(t_upper_quantile(p, df), df), p, 1e-9 * std::max(1.0, p));
    }
    EXPECT_NEAR(t_upper_tail(0, 5), 0.5, 1e-12);
}
