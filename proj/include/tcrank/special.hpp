#ifndef TCRANK_SPECIAL_HPP
#define TCRANK_SPECIAL_HPP

#include "errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <utility>

/**
 * @file special.hpp
 * @brief Polygamma functions and the distribution functions needed for moment matching and null-law checks.
 */

namespace tcrank {

namespace special_internal {

constexpr double machine_eps = std::numeric_limits<double>::epsilon();

inline void check_positive(double x, const char* fun) {
    if (!(x > 0) || std::isnan(x)) {
        throw DomainError(std::string(fun) + " requires a positive argument, got " + std::to_string(x));
    }
}

inline double log_beta(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// Modified Lentz evaluation of the continued fraction for the incomplete beta.
inline double beta_fraction(double a, double b, double x) {
    constexpr double tiny = 1e-300;
    const double qab = a + b, qap = a + 1, qam = a - 1;
    double c = 1, d = 1 - qab * x / qap;
    if (std::abs(d) < tiny) {
        d = tiny;
    }
    d = 1 / d;
    double h = d;

    constexpr int max_iter = 200000;
    for (int m = 1; m <= max_iter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1 + aa * d;
        if (std::abs(d) < tiny) { d = tiny; }
        c = 1 + aa / c;
        if (std::abs(c) < tiny) { c = tiny; }
        d = 1 / d;
        h *= d * c;

        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1 + aa * d;
        if (std::abs(d) < tiny) { d = tiny; }
        c = 1 + aa / c;
        if (std::abs(c) < tiny) { c = tiny; }
        d = 1 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1) < 4 * machine_eps) {
            return h;
        }
    }
    throw NoConvergence("incomplete beta continued fraction did not converge");
}

}

/**
 * Digamma function, computed by upward recurrence to x >= 10 followed by the asymptotic series.
 */
inline double digamma(double x) {
    special_internal::check_positive(x, "digamma");
    double shift = 0;
    while (x < 10) {
        shift -= 1 / x;
        x += 1;
    }
    const double r = 1 / (x * x);
    const double series = r * (1.0 / 12 - r * (1.0 / 120 - r * (1.0 / 252 - r * (1.0 / 240 - r * (1.0 / 132 - r * (691.0 / 32760 - r / 12))))));
    return shift + std::log(x) - 0.5 / x - series;
}

/**
 * Trigamma function, same scheme as `digamma()`.
 */
inline double trigamma(double x) {
    special_internal::check_positive(x, "trigamma");
    double shift = 0;
    while (x < 10) {
        shift += 1 / (x * x);
        x += 1;
    }
    const double r = 1 / (x * x);
    const double series = 1 / x + r / 2 + (r / x) * (1.0 / 6 - r * (1.0 / 30 - r * (1.0 / 42 - r * (1.0 / 30 - r * (5.0 / 66 - r * (691.0 / 2730 - r * 7.0 / 6))))));
    return shift + series;
}

/**
 * Tetragamma function (second derivative of digamma).
 */
inline double tetragamma(double x) {
    special_internal::check_positive(x, "tetragamma");
    double shift = 0;
    while (x < 10) {
        shift -= 2 / (x * x * x);
        x += 1;
    }
    const double r = 1 / (x * x);
    const double series = -r - r / x - r * r / 2 + r * r * r * (1.0 / 6 - r * (1.0 / 6 - r * (3.0 / 10 - r * (5.0 / 6 - r * 691.0 / 210))));
    return shift + series;
}

/**
 * @param x Positive argument.
 * @return Pair containing the digamma and trigamma values at `x`.
 */
inline std::pair<double, double> digamma_trigamma(double x) {
    return { digamma(x), trigamma(x) };
}

/**
 * Solve `trigamma(y) = x` for `y`, using Newton iterations on `1/trigamma` as popularized by limma.
 * Starts from `0.5 + 1/x` and stops once the relative step falls below 1e-8, with at most 50 iterations.
 */
inline double trigamma_inverse(double x) {
    special_internal::check_positive(x, "trigamma_inverse");
    if (x > 1e7) {
        return 1 / std::sqrt(x);
    }
    if (x < 1e-6) {
        return 1 / x;
    }

    double y = 0.5 + 1 / x;
    for (int it = 0; it < 50; ++it) {
        const double tri = trigamma(y);
        const double dif = tri * (1 - tri / x) / tetragamma(y);
        y += dif;
        if (-dif / y < 1e-8) {
            return y;
        }
    }
    throw NoConvergence("trigamma_inverse exceeded 50 iterations");
}

/**
 * Regularized incomplete beta function \f$I_x(a, b)\f$.
 */
inline double incomplete_beta(double x, double a, double b) {
    if (!(a > 0) || !(b > 0)) {
        throw DomainError("incomplete_beta requires positive shape parameters");
    }
    if (!(x >= 0 && x <= 1)) {
        throw DomainError("incomplete_beta requires x in [0, 1]");
    }
    if (x == 0) {
        return 0;
    }
    if (x == 1) {
        return 1;
    }

    const double log_front = a * std::log(x) + b * std::log1p(-x) - special_internal::log_beta(a, b);
    if (x < (a + 1) / (a + b + 2)) {
        return std::exp(log_front) * special_internal::beta_fraction(a, b, x) / a;
    } else {
        return 1 - std::exp(log_front) * special_internal::beta_fraction(b, a, 1 - x) / b;
    }
}

/**
 * Regularized lower incomplete gamma function \f$P(a, x)\f$.
 */
inline double incomplete_gamma(double a, double x) {
    if (!(a > 0) || !(x >= 0)) {
        throw DomainError("incomplete_gamma requires a > 0 and x >= 0");
    }
    if (x == 0) {
        return 0;
    }
    const double log_front = -x + a * std::log(x) - std::lgamma(a);

    if (x < a + 1) {
        double ap = a, sum = 1 / a, del = sum;
        for (int n = 0; n < 100000; ++n) {
            ap += 1;
            del *= x / ap;
            sum += del;
            if (std::abs(del) < std::abs(sum) * special_internal::machine_eps) {
                return sum * std::exp(log_front);
            }
        }
        throw NoConvergence("incomplete gamma series did not converge");
    }

    constexpr double tiny = 1e-300;
    double b = x + 1 - a, c = 1 / tiny, d = 1 / b, h = d;
    for (int i = 1; i < 100000; ++i) {
        const double an = -i * (i - a);
        b += 2;
        d = an * d + b;
        if (std::abs(d) < tiny) { d = tiny; }
        c = b + an / c;
        if (std::abs(c) < tiny) { c = tiny; }
        d = 1 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1) < 4 * special_internal::machine_eps) {
            return 1 - std::exp(log_front) * h;
        }
    }
    throw NoConvergence("incomplete gamma continued fraction did not converge");
}

/**
 * Cumulative distribution function of the F distribution.
 * Degrees of freedom may be non-integer; an infinite `df2` gives the scaled chi-squared limit.
 */
inline double f_cdf(double x, double df1, double df2) {
    if (std::isnan(x) || x < 0) {
        throw DomainError("f_cdf requires x >= 0");
    }
    if (!(df1 > 0) || !(df2 > 0)) {
        throw DomainError("f_cdf requires positive degrees of freedom");
    }
    if (x == 0) {
        return 0;
    }
    if (std::isinf(x)) {
        return 1;
    }
    if (std::isinf(df2)) {
        return incomplete_gamma(df1 / 2, df1 * x / 2);
    }
    const double u = df1 * x;
    return incomplete_beta(u / (u + df2), df1 / 2, df2 / 2);
}

/**
 * Upper tail probability \f$P(T > x)\f$ of Student's t with `df` degrees of freedom.
 */
inline double t_upper_tail(double x, double df) {
    if (!(df > 0)) {
        throw DomainError("t_upper_tail requires positive degrees of freedom");
    }
    if (std::isinf(x)) {
        return x > 0 ? 0 : 1;
    }
    const double half = 0.5 * incomplete_beta(df / (df + x * x), df / 2, 0.5);
    return x >= 0 ? half : 1 - half;
}

/**
 * Inverse of `t_upper_tail()`, i.e. the value `x` with \f$P(T > x) = p\f$.
 */
inline double t_upper_quantile(double p, double df) {
    if (!(p > 0 && p < 1)) {
        throw DomainError("t_upper_quantile requires p in (0, 1)");
    }
    if (p > 0.5) {
        return -t_upper_quantile(1 - p, df);
    }
    if (p == 0.5) {
        return 0;
    }

    double lo = 0, hi = 1;
    while (t_upper_tail(hi, df) > p) {
        lo = hi;
        hi *= 2;
        if (hi > 1e300) {
            throw NoConvergence("t_upper_quantile could not bracket the root");
        }
    }

    const double log_norm = std::lgamma((df + 1) / 2) - std::lgamma(df / 2) - 0.5 * std::log(df * std::numbers::pi);
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 300; ++it) {
        const double f = t_upper_tail(x, df) - p;
        if (f > 0) {
            lo = x;
        } else {
            hi = x;
        }
        const double dens = std::exp(log_norm - (df + 1) / 2 * std::log1p(x * x / df));
        double next = x + f / dens;
        if (!(next > lo && next < hi)) {
            next = 0.5 * (lo + hi);
        }
        if (std::abs(next - x) <= 1e-14 * std::max(1.0, std::abs(x)) || hi - lo <= 1e-15 * hi) {
            return next;
        }
        x = next;
    }
    return x;
}

}

#endif
