#ifndef TCRANK_STATS_HPP
#define TCRANK_STATS_HPP

#include "ebayes.hpp"
#include "errors.hpp"
#include "matlin.hpp"
#include "summaries.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

/**
 * @file stats.hpp
 * @brief Ranking statistics: posterior log-odds, moderated Hotelling statistics and the baseline statistics.
 *
 * Every statistic is oriented so that larger values are more interesting.
 */

namespace tcrank {

enum class StatisticKind : unsigned char {
    MB,
    MB_FIRST_DIFF,
    MB_SIGMA_DIAG,
    MB_NU_INF,
    MB_NU_ZERO,
    ANOVA_F,
    PARTLY_MODERATED_F,
    MODERATED_HOTELLING,
    REPLICATE_VARIANCE,
    MB_TWO_SAMPLE,
    MB_CONSTANCY,
    MODERATED_LR
};

/**
 * The nine statistics of the simulation comparison, in their conventional order.
 */
inline constexpr StatisticKind comparison_statistics[] = {
    StatisticKind::MB,
    StatisticKind::MB_FIRST_DIFF,
    StatisticKind::MB_SIGMA_DIAG,
    StatisticKind::MB_NU_INF,
    StatisticKind::MB_NU_ZERO,
    StatisticKind::ANOVA_F,
    StatisticKind::PARTLY_MODERATED_F,
    StatisticKind::MODERATED_HOTELLING,
    StatisticKind::REPLICATE_VARIANCE
};

inline const char* to_string(StatisticKind kind) {
    switch (kind) {
        case StatisticKind::MB: return "mb";
        case StatisticKind::MB_FIRST_DIFF: return "mb_first_diff";
        case StatisticKind::MB_SIGMA_DIAG: return "mb_sigma_diag";
        case StatisticKind::MB_NU_INF: return "mb_nu_inf";
        case StatisticKind::MB_NU_ZERO: return "mb_nu_zero";
        case StatisticKind::ANOVA_F: return "anova_f";
        case StatisticKind::PARTLY_MODERATED_F: return "partly_moderated_f";
        case StatisticKind::MODERATED_HOTELLING: return "moderated_hotelling";
        case StatisticKind::REPLICATE_VARIANCE: return "replicate_variance";
        case StatisticKind::MB_TWO_SAMPLE: return "mb_two_sample";
        case StatisticKind::MB_CONSTANCY: return "mb_constancy";
        case StatisticKind::MODERATED_LR: return "moderated_lr";
    }
    return "unknown";
}

inline StatisticKind parse_statistic(const std::string& name) {
    for (int i = 0; i <= static_cast<int>(StatisticKind::MODERATED_LR); ++i) {
        auto kind = static_cast<StatisticKind>(i);
        if (name == to_string(kind)) {
            return kind;
        }
    }
    throw ParameterOutOfRange("unknown statistic '" + name + "'");
}

inline const char* to_string(Design design) {
    switch (design) {
        case Design::ONE_SAMPLE: return "one_sample";
        case Design::PAIRED: return "paired";
        case Design::UNPAIRED_TWO_SAMPLE: return "unpaired_two_sample";
        case Design::CONSTANCY: return "constancy";
    }
    return "unknown";
}

/**
 * @brief Posterior odds on the natural-log scale, and the corresponding MB value.
 */
struct Odds {
    double log_odds = 0;

    /**
     * `log_odds / log(10)`.
     */
    double mb = 0;
};

namespace stats_internal {

inline Odds make_odds(double log_odds) {
    return Odds{ log_odds, log_odds / std::log(10.0) };
}

inline void check_common(double eta, double p) {
    if (!(eta > 0) || std::isinf(eta)) {
        throw ParameterOutOfRange("eta must be positive and finite");
    }
    if (!(p > 0 && p < 1)) {
        throw ParameterOutOfRange("p must lie in (0, 1)");
    }
}

inline double logit(double p) {
    return std::log(p) - std::log1p(-p);
}

/*
 * Contribution of a squared moderated statistic to the log-odds:
 * ((A + 1) / 2) * [log(1 + t2 / A) - log(1 + a t2 / A)] with A = resid_df + nu,
 * or its limit (1 - a) t2 / 2 when nu is infinite.
 */
inline double t2_term(double t2, double a, double resid_df, double nu) {
    if (t2 == 0) {
        return 0;
    }
    if (std::isinf(nu)) {
        return 0.5 * (1 - a) * t2;
    }
    const double big_a = resid_df + nu;
    const double expo = 0.5 * (big_a + 1);
    if (std::isinf(t2)) {
        return -expo * std::log(a);
    }
    return expo * (std::log1p(t2 / big_a) - std::log1p(a * t2 / big_a));
}

inline void check_moderation(double resid_df, double nu) {
    if (!(nu >= 0)) {
        throw ParameterOutOfRange("nu must be non-negative");
    }
    if (!(resid_df + nu > 0)) {
        throw ParameterOutOfRange("resid_df + nu must be positive");
    }
}

}

/**
 * Posterior log-odds of a moderated statistic in its general form.
 * With `a = eta / (n_eff + eta)` and `A = resid_df + nu`,
 * `log O = log(p / (1 - p)) + (dim / 2) log(a) + ((A + 1) / 2) [log(1 + T2 / A) - log(1 + a T2 / A)]`.
 *
 * @param t2 Squared norm of the moderated t vector; may be infinite.
 * @param effective_n Precision factor of the mean.
 * @param resid_df Residual degrees of freedom of the sample covariance.
 * @param dim Dimension of the mean.
 * @param nu Prior degrees of freedom, possibly infinite.
 */
inline Odds posterior_odds(double t2, double effective_n, double resid_df, double dim, double nu, double eta, double p) {
    if (!(t2 >= 0)) {
        throw ParameterOutOfRange("T2 must be non-negative");
    }
    if (!(effective_n > 0) || !(dim >= 1) || !(resid_df >= 0)) {
        throw ParameterOutOfRange("invalid replicate count or dimension");
    }
    stats_internal::check_common(eta, p);
    stats_internal::check_moderation(resid_df, nu);
    const double a = eta / (effective_n + eta);
    return stats_internal::make_odds(stats_internal::logit(p) + 0.5 * dim * std::log(a) + stats_internal::t2_term(t2, a, resid_df, nu));
}

/**
 * One-sample posterior odds and MB from the moderated T-squared statistic.
 */
inline Odds mb_one_sample(double t2, int n, Eigen::Index k, double nu, double eta, double p) {
    if (n < 1 || k < 1) {
        throw ParameterOutOfRange("need n >= 1 and k >= 1");
    }
    return posterior_odds(t2, n, n - 1, static_cast<double>(k), nu, eta, p);
}

/**
 * Posterior odds when the gene covariance is a multiple of the identity, for any design.
 * The odds factorize over coordinates, with `s~_j^2 = (resid_df s_j^2 + nu lambda_sq) / (resid_df + nu)`
 * and `t~_j^2 = n_eff xbar_j^2 / s~_j^2`.
 *
 * @param xbar Mean vector.
 * @param s_sq Per-coordinate sample variances.
 */
inline Odds mb_sigma_diag(const Vector& xbar, const Vector& s_sq, double effective_n, double resid_df, double nu, double lambda_sq, double eta, double p) {
    if (xbar.size() != s_sq.size()) {
        throw DimensionMismatch("mean and variances differ in length");
    }
    if (!(effective_n > 0) || !(resid_df >= 0)) {
        throw ParameterOutOfRange("invalid replicate count");
    }
    stats_internal::check_common(eta, p);
    stats_internal::check_moderation(resid_df, nu);
    if (nu > 0 && !(lambda_sq > 0)) {
        throw ParameterOutOfRange("lambda_sq must be positive");
    }

    const double a = eta / (effective_n + eta);
    const auto k = xbar.size();
    double log_odds = stats_internal::logit(p) + 0.5 * k * std::log(a);
    for (Eigen::Index j = 0; j < k; ++j) {
        double s_tilde;
        if (std::isinf(nu)) {
            s_tilde = lambda_sq;
        } else {
            s_tilde = (resid_df * s_sq[j] + nu * lambda_sq) / (resid_df + nu);
        }
        double tj2;
        if (s_tilde > 0) {
            tj2 = effective_n * xbar[j] * xbar[j] / s_tilde;
        } else {
            tj2 = (xbar[j] == 0 ? 0 : std::numeric_limits<double>::infinity());
        }
        log_odds += stats_internal::t2_term(tj2, a, resid_df, nu);
    }
    return stats_internal::make_odds(log_odds);
}

/**
 * One-sample version of the above, with `n` replicates.
 */
inline Odds mb_sigma_diag(const Vector& xbar, const Vector& s_sq, int n, double nu, double lambda_sq, double eta, double p) {
    if (n < 1) {
        throw ParameterOutOfRange("need n >= 1");
    }
    return mb_sigma_diag(xbar, s_sq, static_cast<double>(n), static_cast<double>(n - 1), nu, lambda_sq, eta, p);
}

/**
 * Posterior odds in the limit of infinite prior degrees of freedom, where only the common matrix is used:
 * `log O = log(p / (1 - p)) + (k / 2) log(eta / (n + eta)) + (n / (n + eta)) T2 / 2` with `T2 = n xbar' Lambda^-1 xbar`.
 */
inline Odds mb_limit_nu_inf(const Vector& xbar, double effective_n, const SymMatrix& lambda, double eta, double p) {
    if (xbar.size() != lambda.dim()) {
        throw DimensionMismatch("mean and common matrix differ in dimension");
    }
    const Vector t = std::sqrt(effective_n) * (inv_sqrt(lambda).matrix() * xbar);
    return posterior_odds(t.squaredNorm(), effective_n, 0, static_cast<double>(xbar.size()), std::numeric_limits<double>::infinity(), eta, p);
}

/**
 * Scalar-variance version of `mb_limit_nu_inf()`, with `Lambda = lambda_sq * I`.
 */
inline Odds mb_limit_nu_inf(const Vector& xbar, double effective_n, double lambda_sq, double eta, double p) {
    if (!(lambda_sq > 0)) {
        throw NotPositiveDefinite("lambda_sq must be positive");
    }
    const double t2 = effective_n * xbar.squaredNorm() / lambda_sq;
    return posterior_odds(t2, effective_n, 0, static_cast<double>(xbar.size()), std::numeric_limits<double>::infinity(), eta, p);
}

/**
 * @brief Moderated T-squared statistic computed without moderation, using a generalized inverse where needed.
 */
struct UnmoderatedT2 {
    double t2;

    /**
     * Rank of the sample covariance.
     */
    Eigen::Index rank;
};

/**
 * `n xbar' S^+ xbar`, with `S^+` the Moore-Penrose inverse.
 */
inline UnmoderatedT2 unmoderated_t2(const Vector& xbar, const SymMatrix& s, double effective_n) {
    if (xbar.size() != s.dim()) {
        throw DimensionMismatch("mean and covariance differ in dimension");
    }
    const Vector t = std::sqrt(effective_n) * (pseudo_inv_sqrt(s).matrix() * xbar);
    return UnmoderatedT2{ t.squaredNorm(), rank(s) };
}

/**
 * Posterior odds in the limit of zero prior degrees of freedom, where the sample covariance is used as is.
 * Singular covariances (e.g., fewer replicates than time points) are handled with the Moore-Penrose inverse.
 */
inline Odds mb_limit_nu_zero(const Vector& xbar, const SymMatrix& s, int n, double eta, double p) {
    if (n < 2) {
        throw InsufficientReplicates("zero-moderation limit needs n >= 2");
    }
    const auto t2 = unmoderated_t2(xbar, s, n).t2;
    return posterior_odds(t2, n, n - 1, static_cast<double>(xbar.size()), 0, eta, p);
}

/**
 * Posterior odds of a gene without replication. All hyperparameters must be user-supplied.
 * The moderated statistic is `X' Lambda^-1 X`.
 */
inline Odds mb_n1(const Vector& x, const Hyperparameters& h) {
    const bool ready = h.has_nu() && h.has_lambda() && h.has_eta()
        && h.provenance.nu == Provenance::USER_SET
        && h.provenance.lambda == Provenance::USER_SET
        && h.provenance.eta == Provenance::USER_SET
        && h.provenance.p == Provenance::USER_SET;
    if (!ready) {
        throw MissingHyperparameters("genes without replication need user-set nu, lambda, eta and p");
    }
    if (x.size() != h.lambda.dim()) {
        throw DimensionMismatch("profile and common matrix differ in dimension");
    }
    if (!(h.nu > 0)) {
        throw ParameterOutOfRange("genes without replication need nu > 0");
    }
    const Vector t = inv_sqrt(h.lambda).matrix() * x;
    return posterior_odds(t.squaredNorm(), 1, 0, static_cast<double>(x.size()), h.nu, h.eta, h.p);
}

/**
 * @brief Result of a two-sample or constancy posterior-odds calculation.
 */
struct OddsWithT2 {
    Odds odds;
    double t2;
};

/**
 * Unpaired two-sample posterior odds from the difference of means and the pooled covariance.
 * The precision factor is `mn / (m + n)` and the pooled residual degrees of freedom are `m + n - 2`.
 */
inline OddsWithT2 mb_two_sample(const Vector& d, const SymMatrix& pooled, int m, int n, double nu, const SymMatrix& lambda, double eta, double p) {
    if (m < 1 || n < 1 || m + n < 3) {
        throw ParameterOutOfRange("two-sample odds need m, n >= 1 and m + n >= 3");
    }
    const double neff = static_cast<double>(m) * n / (m + n);
    const double df = m + n - 2;
    const auto s_tilde = moderate_covariance(pooled, df, nu, lambda);
    const double t2 = moderated_t(d, s_tilde, neff).squaredNorm();
    return OddsWithT2{ posterior_odds(t2, neff, df, static_cast<double>(d.size()), nu, eta, p), t2 };
}

/**
 * Posterior odds against a constant mean profile, from a constancy summary.
 * This is the one-sample calculation on the `k - 1` transformed coordinates, with `lambda` being the transformed common matrix.
 */
inline OddsWithT2 mb_constancy(const GeneSummary& summary, double nu, const SymMatrix& lambda, double eta, double p) {
    if (summary.design != Design::CONSTANCY) {
        throw DimensionMismatch("constancy odds need a constancy summary");
    }
    const auto mod = moderate(summary, nu, lambda);
    return OddsWithT2{ posterior_odds(mod.t2, summary.effective_n, summary.df, static_cast<double>(summary.dim()), nu, eta, p), mod.t2 };
}

/**
 * @brief Moderated likelihood ratio and its Hotelling quadratic form.
 */
struct LrResult {
    double lr;

    /**
     * `n_eff d' S~^-1 d`, the moderated Hotelling statistic.
     */
    double quadratic;
};

/**
 * Moderated likelihood ratio statistic `N log(1 + Q / resid_df)`, where `Q = n_eff d' S~^-1 d`.
 * For the one-sample design `N = n` and `resid_df = n - 1`; for the unpaired design `N = m + n` and `resid_df = m + n - 2`.
 */
inline LrResult moderated_lr(const Vector& d, const SymMatrix& s_tilde, double effective_n, double resid_df, double total_n) {
    if (!(resid_df > 0)) {
        throw InsufficientDegreesOfFreedom("moderated LR needs positive residual degrees of freedom");
    }
    const double q = moderated_t(d, s_tilde, effective_n).squaredNorm();
    return LrResult{ total_n * std::log1p(q / resid_df), q };
}

/**
 * Generalized least squares estimate of a constant mean, `(1' S^-1 xbar) / (1' S^-1 1) * 1`.
 */
inline Vector constancy_mle_shift(const Vector& xbar, const SymMatrix& s) {
    if (xbar.size() != s.dim()) {
        throw DimensionMismatch("mean and covariance differ in dimension");
    }
    const Matrix l = cholesky(s);
    const Vector ones = Vector::Ones(xbar.size());
    const auto solver = l.triangularView<Eigen::Lower>();
    const Vector w1 = solver.solve(ones);
    const Vector wx = solver.solve(xbar);
    const double level = w1.dot(wx) / w1.squaredNorm();
    return Vector::Constant(xbar.size(), level);
}

/**
 * @brief Two-way analysis of variance without interaction on an `n`-by-`k` replicate-by-time layout.
 */
struct AnovaResult {
    double f = 0;
    double ms_time = 0;
    double ms_residual = 0;
    double df_time = 0;
    double df_residual = 0;
    double ss_time = 0;
    double ss_residual = 0;

    /**
     * Whether all values are equal, in which case `f` is set to zero.
     */
    bool zero_variance = false;

    /**
     * Whether the residual variance is zero with a non-constant profile, in which case `f` is infinite.
     */
    bool perfect_fit = false;
};

namespace stats_internal {

inline Matrix layout(std::span<const Vector> reps) {
    if (reps.empty()) {
        throw InsufficientReplicates("no replicates");
    }
    const auto k = reps.front().size();
    Matrix out(reps.size(), k);
    for (std::size_t i = 0; i < reps.size(); ++i) {
        if (reps[i].size() != k) {
            throw DimensionMismatch("replicates have different lengths");
        }
        if (!reps[i].allFinite()) {
            throw NonFiniteValue("replicate contains a non-finite value");
        }
        out.row(i) = reps[i].transpose();
    }
    return out;
}

}

/**
 * Ordinary F statistic for time effects in a model with time and replicate main effects.
 * The degrees of freedom are `(k - 1, (k - 1)(n - 1))`.
 */
inline AnovaResult anova_f(std::span<const Vector> replicates) {
    const Matrix y = stats_internal::layout(replicates);
    const auto n = y.rows(), k = y.cols();
    if (k < 2) {
        throw InvalidDimension("ANOVA needs k >= 2");
    }
    if (n < 2) {
        throw DegenerateLayout("ANOVA needs n >= 2 for residual degrees of freedom");
    }

    const double grand = y.mean();
    const Vector row_means = y.rowwise().mean();
    const Eigen::RowVectorXd col_means = y.colwise().mean();

    AnovaResult out;
    out.df_time = k - 1;
    out.df_residual = (k - 1) * (n - 1);
    out.ss_time = n * (col_means.array() - grand).square().sum();
    double ss_res = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) {
            const double r = y(i, j) - row_means(i) - col_means(j) + grand;
            ss_res += r * r;
        }
    }
    out.ss_residual = ss_res;
    out.ms_time = out.ss_time / out.df_time;
    out.ms_residual = ss_res / out.df_residual;

    const double ss_total = (y.array() - grand).square().sum();
    if (ss_total == 0) {
        out.zero_variance = true;
        out.f = 0;
        out.ms_time = 0;
        out.ms_residual = 0;
        return out;
    }
    // Rounding leaves residues of order eps^2 * ss_total in a perfectly additive layout.
    if (ss_res <= 1e-24 * ss_total) {
        out.ms_residual = 0;
        if (out.ms_time > 0) {
            out.perfect_fit = true;
            out.f = std::numeric_limits<double>::infinity();
        } else {
            out.zero_variance = true;
            out.f = 0;
        }
        return out;
    }
    out.f = out.ms_time / out.ms_residual;
    return out;
}

/**
 * F statistic with the residual variance moderated towards a prior value,
 * `MS_time / ((d0 s0_sq + d_res MS_res) / (d0 + d_res))`. An infinite `d0` uses `s0_sq` directly.
 */
inline double partly_moderated_f(const AnovaResult& anova, double d0, double s0_sq) {
    if (!(d0 >= 0)) {
        throw ParameterOutOfRange("prior degrees of freedom must be non-negative");
    }
    double denom;
    if (std::isinf(d0)) {
        denom = s0_sq;
    } else {
        denom = (d0 * s0_sq + anova.df_residual * anova.ms_residual) / (d0 + anova.df_residual);
    }
    if (denom > 0) {
        return anova.ms_time / denom;
    }
    return anova.ms_time > 0 ? std::numeric_limits<double>::infinity() : 0;
}

/**
 * Overload that takes the replicates directly.
 */
inline double partly_moderated_f(std::span<const Vector> replicates, double d0, double s0_sq) {
    return partly_moderated_f(anova_f(replicates), d0, s0_sq);
}

/**
 * Total variance across the replicate-by-time layout, `(nk - 1)^-1 sum (X_ij - grand mean)^2`.
 */
inline double replicate_variance(std::span<const Vector> replicates) {
    const Matrix y = stats_internal::layout(replicates);
    if (y.size() < 2) {
        throw InsufficientReplicates("need at least two values");
    }
    const double grand = y.mean();
    return (y.array() - grand).square().sum() / static_cast<double>(y.size() - 1);
}

/**
 * @brief Null law of the moderated T-squared statistic: `T2 / divisor` follows `F(df1, df2)`.
 */
struct NullLaw {
    double df1;
    double df2;
    double divisor;
};

/**
 * Exact null law of the moderated T-squared statistic with known hyperparameters.
 * The statistic is Hotelling-distributed, so that with `q` the dimension and `f` the denominator degrees of freedom,
 * `T2 (f / (q (f + q - 1))) ~ F(q, f)`. Specifically:
 * - one-sample: `q = k`, `f = n + nu - k`;
 * - constancy: `q = k - 1`, `f = n + nu - k + 1`;
 * - unpaired two-sample: `q = k`, `f = m + n + nu - k - 1`.
 *
 * An infinite `nu` gives the chi-squared limit, `T2 / q ~ F(q, infinity)`.
 *
 * @param design Design of the statistic. Paired designs are one-sample designs on the differences.
 * @param k Number of time points.
 * @param n Replicate count (second condition in the unpaired design).
 * @param m Replicate count of the first condition in the unpaired design, otherwise ignored.
 */
inline NullLaw null_distribution(Design design, Eigen::Index k, double n, double nu, double m = 0) {
    double q, f;
    switch (design) {
        case Design::ONE_SAMPLE:
        case Design::PAIRED:
            q = k;
            f = n + nu - k;
            break;
        case Design::CONSTANCY:
            q = k - 1;
            f = n + nu - k + 1;
            break;
        case Design::UNPAIRED_TWO_SAMPLE:
            q = k;
            f = m + n + nu - k - 1;
            break;
        default:
            throw ParameterOutOfRange("unknown design");
    }
    if (!(q >= 1)) {
        throw InvalidDimension("null law needs at least one tested dimension");
    }
    if (!(f > 0)) {
        throw InsufficientDegreesOfFreedom("null law has non-positive denominator degrees of freedom");
    }
    if (std::isinf(f)) {
        return NullLaw{ q, f, q };
    }
    return NullLaw{ q, f, q * (f + q - 1) / f };
}

/**
 * @brief Statistic value of a single gene.
 */
struct GeneScore {
    std::string gene;

    /**
     * Value used for ranking; `+infinity` is allowed and ranks first.
     */
    double statistic = 0;

    /**
     * Secondary key used to break ties among equal statistics, e.g., the time mean square among infinite F values.
     */
    double tiebreak = 0;

    /**
     * Moderated T-squared, NaN when not defined for the statistic.
     */
    double t2 = std::numeric_limits<double>::quiet_NaN();

    /**
     * MB value, NaN when not defined for the statistic.
     */
    double mb = std::numeric_limits<double>::quiet_NaN();

    /**
     * Replicates used: `n`, or `m + n` in the unpaired design.
     */
    int n = 0;

    /**
     * Optional flag, e.g., `zero_variance` or `perfect_fit` for the F statistics.
     */
    std::string flag;
};

/**
 * Ranking order of a set of scores: descending statistic, then descending tiebreak, then input order.
 *
 * @return Indices into `scores`, in rank order.
 */
inline std::vector<std::size_t> rank_order(std::span<const GeneScore> scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& x = scores[a];
        const auto& y = scores[b];
        if (x.statistic != y.statistic) {
            return x.statistic > y.statistic;
        }
        return x.tiebreak > y.tiebreak;
    });
    return order;
}

}

#endif
