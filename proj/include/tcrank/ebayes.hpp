#ifndef TCRANK_EBAYES_HPP
#define TCRANK_EBAYES_HPP

#include "errors.hpp"
#include "matlin.hpp"
#include "special.hpp"
#include "summaries.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <span>
#include <string>
#include <vector>

/**
 * @file ebayes.hpp
 * @brief Empirical Bayes estimation of the prior hyperparameters.
 *
 * The prior degrees of freedom are estimated per time point by matching the first two moments of the
 * log sample variances, the common matrix is estimated from the average sample covariance,
 * and the scale of the non-null mean prior is estimated by matching the quantiles of the most extreme moderated t values.
 */

namespace tcrank {

constexpr double infinity = std::numeric_limits<double>::infinity();

enum class Provenance : unsigned char { ESTIMATED, USER_SET };

inline const char* to_string(Provenance p) {
    return p == Provenance::ESTIMATED ? "estimated" : "user_set";
}

/**
 * @brief Hyperparameters of the hierarchical model, with the origin of each value.
 *
 * Unset values are NaN (or an empty matrix for `lambda`).
 * `nu` may be `infinity`, meaning that gene-specific covariances are ignored altogether.
 */
struct Hyperparameters {
    double nu = std::numeric_limits<double>::quiet_NaN();

    /**
     * Prior degrees of freedom used while estimating `lambda`; floored at `dim + 6`.
     */
    double nu_stage1 = std::numeric_limits<double>::quiet_NaN();

    /**
     * Common matrix towards which sample covariances are shrunk.
     */
    SymMatrix lambda;

    double eta = std::numeric_limits<double>::quiet_NaN();

    /**
     * Prior proportion of non-null genes. Only shifts MB by a constant, so it does not affect rankings.
     */
    double p = 0.02;

    // Level-channel priors of the constancy model. These cancel out of the posterior odds.
    double xi = 1;
    double lambda_sq = 1;
    double theta = 0;
    double kappa = 1;
    double tau = 1;

    /**
     * Per-time-point prior degrees of freedom behind `nu`, when estimated.
     */
    std::vector<double> nu_per_timepoint;

    /**
     * Per-column estimates behind `eta`, when estimated.
     */
    std::vector<double> eta_per_column;

    /**
     * Whether any column of the `eta` estimation fell back to 1 for lack of admissible solutions.
     */
    bool eta_fallback = false;

    struct {
        Provenance nu = Provenance::USER_SET;
        Provenance lambda = Provenance::USER_SET;
        Provenance eta = Provenance::USER_SET;
        Provenance p = Provenance::USER_SET;
        Provenance xi = Provenance::USER_SET;
        Provenance lambda_sq = Provenance::USER_SET;
        Provenance theta = Provenance::USER_SET;
        Provenance kappa = Provenance::USER_SET;
        Provenance tau = Provenance::USER_SET;
    } provenance;

    bool has_nu() const { return !std::isnan(nu); }
    bool has_lambda() const { return !lambda.empty(); }
    bool has_eta() const { return !std::isnan(eta); }
};

/**
 * @brief User-supplied values that replace the corresponding estimates.
 */
struct HyperOverrides {
    std::optional<double> nu;
    std::optional<SymMatrix> lambda;
    std::optional<double> eta;
    std::optional<double> p;
    std::optional<double> xi;
    std::optional<double> lambda_sq;
    std::optional<double> theta;
    std::optional<double> kappa;
    std::optional<double> tau;
};

/**
 * @brief Scaled inverse chi-squared prior fitted to a set of sample variances.
 */
struct PriorFit {
    /**
     * Prior degrees of freedom, possibly `infinity` when the variances show no excess dispersion.
     */
    double df = 0;

    /**
     * Prior location of the variances.
     */
    double scale = 0;
};

/**
 * Fit a scaled inverse chi-squared prior to sample variances by moment matching on their logarithms.
 * With `z = log(s^2)`, the prior degrees of freedom `d0` solve `trigamma(d0/2) = var(e) - mean(trigamma(d/2))`
 * where `e = z - digamma(d/2) + log(d/2)`; a non-positive right-hand side gives `d0 = infinity`.
 * Variances are floored at `1e-5` times their median before taking logarithms.
 *
 * @param variances Sample variances, one per gene.
 * @param df Residual degrees of freedom, one per gene.
 * @param minimum_genes Minimum number of usable genes.
 */
inline PriorFit fit_prior_variance(std::span<const double> variances, std::span<const double> df, std::size_t minimum_genes = 50) {
    if (variances.size() != df.size()) {
        throw LengthMismatch("variances and degrees of freedom differ in length");
    }

    std::vector<double> x, d;
    x.reserve(variances.size());
    d.reserve(variances.size());
    for (std::size_t i = 0; i < variances.size(); ++i) {
        if (std::isfinite(variances[i]) && variances[i] > -1e-15 && df[i] >= 1) {
            x.push_back(std::max(variances[i], 0.0));
            d.push_back(df[i]);
        }
    }
    if (x.size() < minimum_genes) {
        throw TooFewGenes("need at least " + std::to_string(minimum_genes) + " genes with residual df >= 1, got " + std::to_string(x.size()));
    }

    std::vector<double> sorted = x;
    const auto mid = sorted.begin() + sorted.size() / 2;
    std::nth_element(sorted.begin(), mid, sorted.end());
    double median = *mid;
    if (sorted.size() % 2 == 0) {
        median = 0.5 * (median + *std::max_element(sorted.begin(), mid));
    }
    if (median == 0) {
        median = 1;
    }

    const std::size_t ngenes = x.size();
    std::vector<double> e(ngenes);
    double mean_trigamma = 0;
    for (std::size_t i = 0; i < ngenes; ++i) {
        const double z = std::log(std::max(x[i], 1e-5 * median));
        e[i] = z - digamma(d[i] / 2) + std::log(d[i] / 2);
        mean_trigamma += trigamma(d[i] / 2);
    }
    mean_trigamma /= ngenes;

    const double emean = std::accumulate(e.begin(), e.end(), 0.0) / ngenes;
    double evar = 0;
    for (auto v : e) {
        evar += (v - emean) * (v - emean);
    }
    evar /= (ngenes - 1);
    evar -= mean_trigamma;

    PriorFit out;
    if (evar > 0) {
        out.df = 2 * trigamma_inverse(evar);
        out.scale = std::exp(emean + digamma(out.df / 2) - std::log(out.df / 2));
    } else {
        out.df = infinity;
        out.scale = std::exp(emean);
    }
    return out;
}

/**
 * Prior degrees of freedom from the sample variances at a single time point.
 *
 * @param variances Per-gene sample variances at this time point.
 * @param df Residual degrees of freedom, shared by all genes.
 *
 * @return Estimate, possibly `infinity`.
 */
inline double estimate_nu_per_timepoint(std::span<const double> variances, double df) {
    std::vector<double> d(variances.size(), df);
    return fit_prior_variance(variances, d).df;
}

/**
 * @brief Two-stage estimate of the prior degrees of freedom.
 */
struct NuEstimate {
    /**
     * Value used to estimate the common matrix, at least `dim + 6`.
     */
    double stage1;

    /**
     * Value used everywhere else.
     */
    double final;
};

/**
 * Combine per-time-point estimates into the two-stage estimate.
 * Infinite per-time-point values propagate into an infinite mean.
 *
 * @param per_timepoint Per-time-point estimates, ignored if `user_nu` is supplied.
 * @param dim Dimension of the covariance matrices.
 * @param user_nu Optional user-defined value that replaces the mean.
 */
inline NuEstimate estimate_nu(std::span<const double> per_timepoint, Eigen::Index dim, std::optional<double> user_nu = std::nullopt) {
    double central;
    if (user_nu) {
        if (!(*user_nu >= 0)) {
            throw ParameterOutOfRange("nu must be non-negative");
        }
        central = *user_nu;
    } else {
        if (per_timepoint.empty()) {
            throw InvalidDimension("no per-time-point estimates");
        }
        central = 0;
        for (auto v : per_timepoint) {
            central += v;
        }
        central /= per_timepoint.size();
    }
    return NuEstimate{ std::max(central, static_cast<double>(dim) + 6), central };
}

/**
 * Common matrix from the mean sample covariance, `(nu - dim - 1) / nu * mean_s`, or `mean_s` itself when `nu` is infinite.
 */
inline SymMatrix estimate_lambda(const SymMatrix& mean_s, double nu_stage1, Eigen::Index dim) {
    if (mean_s.dim() != dim) {
        throw DimensionMismatch("mean covariance does not match the stated dimension");
    }
    SymMatrix out;
    if (std::isinf(nu_stage1)) {
        out = mean_s;
    } else {
        if (!(nu_stage1 > dim + 1)) {
            throw ParameterOutOfRange("nu for the common matrix must exceed dim + 1");
        }
        out = mean_s.scaled((nu_stage1 - dim - 1) / nu_stage1);
    }
    cholesky(out); // throws if degenerate
    return out;
}

/**
 * @brief Estimate of the scale of the non-null mean prior.
 */
struct EtaEstimate {
    double eta = 1;
    std::vector<double> per_column;
    bool fallback = false;
};

/**
 * @brief Null law of the coordinates of the moderated t vector.
 *
 * Under the null, each coordinate is treated as Student's t with `df` degrees of freedom;
 * under the alternative it is additionally inflated by `sqrt((n + eta) / eta)`.
 */
struct TCoordinateLaw {
    double df;
};

/**
 * Coordinate law of the moderated t vector for a gene with residual degrees of freedom `resid_df` and dimension `dim`.
 */
inline TCoordinateLaw t_coordinate_law(double resid_df, double nu, Eigen::Index dim) {
    if (std::isinf(nu)) {
        return TCoordinateLaw{ infinity };
    }
    const double f = resid_df + 1 + nu - dim;
    if (!(f > 0)) {
        throw InsufficientDegreesOfFreedom("moderated t has non-positive degrees of freedom " + std::to_string(f));
    }
    return TCoordinateLaw{ f };
}

/**
 * Estimate the scale of the non-null mean prior from the moderated t values.
 *
 * For each column, the `ceil(p G / 2)` largest absolute values are compared with the two-component mixture
 * `p * scaled-t + (1 - p) * t`. Each of them is matched to the boundary order statistic `r = ceil(p G / 2)`:
 * the target tail probability of the scaled component is `((r - 0.5) / G - (1 - p) p0) / p`, where `p0` is the
 * gene's null two-sided tail probability. Whenever the target exceeds `p0`, matching the corresponding quantile `q`
 * gives the prior variance ratio `1 / eta = ((|t| / q)^2 - 1) / n`. These ratios are averaged per column and inverted,
 * a column without solutions contributes 1 and is flagged, and the column estimates are averaged.
 *
 * @param t_values Moderated t values, one row per gene.
 * @param effective_n Precision factor of each gene's mean.
 * @param laws Null law of each gene's coordinates.
 * @param p Prior proportion of non-null genes.
 */
inline EtaEstimate estimate_eta(const Matrix& t_values, std::span<const double> effective_n, std::span<const TCoordinateLaw> laws, double p) {
    const auto ngenes = static_cast<std::size_t>(t_values.rows());
    if (effective_n.size() != ngenes || laws.size() != ngenes) {
        throw LengthMismatch("t values, precision factors and laws differ in length");
    }
    if (!(p > 0 && p < 1)) {
        throw ParameterOutOfRange("p must lie in (0, 1)");
    }

    const std::size_t ntarget = static_cast<std::size_t>(std::ceil(p / 2 * ngenes));
    if (ntarget < 10) {
        throw TooFewTopGenes("top set holds " + std::to_string(ntarget) + " genes, need at least 10");
    }
    const double peff = std::max(static_cast<double>(ntarget) / ngenes, p);

    // Student's t with very large df is indistinguishable from the normal at double precision.
    constexpr double df_cap = 1e6;
    double max_df = 0;
    bool equal_df = true;
    for (const auto& l : laws) {
        if (!(l.df > 0)) {
            throw InsufficientDegreesOfFreedom("t law with non-positive degrees of freedom");
        }
        if (l.df != laws[0].df) {
            equal_df = false;
        }
        max_df = std::max(max_df, std::min(l.df, df_cap));
    }

    EtaEstimate out;
    out.per_column.reserve(t_values.cols());
    std::vector<double> standardized(ngenes);
    std::vector<std::size_t> order(ngenes);

    for (Eigen::Index j = 0; j < t_values.cols(); ++j) {
        for (std::size_t g = 0; g < ngenes; ++g) {
            double x = std::abs(t_values(g, j));
            const double df_g = std::min(laws[g].df, df_cap);
            if (!equal_df && df_g < max_df && x > 0) {
                // Convert to the equivalent quantile of the largest df.
                const double tail = t_upper_tail(x, df_g);
                x = tail > 0 ? t_upper_quantile(std::min(tail, 0.5), max_df) : x;
            }
            standardized[g] = x;
        }

        std::iota(order.begin(), order.end(), 0);
        std::partial_sort(order.begin(), order.begin() + ntarget, order.end(), [&](std::size_t a, std::size_t b) {
            if (standardized[a] == standardized[b]) {
                return a < b;
            }
            return standardized[a] > standardized[b];
        });

        const double boundary = (static_cast<double>(ntarget) - 0.5) / ngenes;
        double total = 0;
        std::size_t count = 0;
        for (std::size_t r = 0; r < ntarget; ++r) {
            const std::size_t g = order[r];
            const double x = standardized[g];
            const double p0 = 2 * t_upper_tail(x, max_df);
            const double ptarget = (boundary - (1 - peff) * p0) / peff;
            if (ptarget > p0 && ptarget < 1) {
                const double q = t_upper_quantile(ptarget / 2, max_df);
                const double inflation = (x / q) * (x / q);
                if (inflation > 1) {
                    total += (inflation - 1) / effective_n[g];
                    ++count;
                }
            }
        }

        if (count == 0) {
            out.per_column.push_back(1);
            out.fallback = true;
        } else {
            out.per_column.push_back(count / total);
        }
    }

    out.eta = std::accumulate(out.per_column.begin(), out.per_column.end(), 0.0) / out.per_column.size();
    return out;
}

/**
 * @brief Options for `estimate_hyperparameters()`.
 */
struct EstimationOptions {
    /**
     * Prior proportion of non-null genes; also sets the size of the top set used for `eta`.
     */
    double p = 0.02;

    /**
     * Whether to estimate `eta`. Rankings by the T-squared statistic do not need it.
     */
    bool estimate_eta = true;
};

namespace ebayes_internal {

inline std::vector<const GeneSummary*> usable(std::span<const GeneSummary> summaries) {
    std::vector<const GeneSummary*> out;
    out.reserve(summaries.size());
    for (const auto& s : summaries) {
        if (s.has_covariance() && s.df >= 1) {
            out.push_back(&s);
        }
    }
    if (out.empty()) {
        throw TooFewGenes("no genes with a sample covariance");
    }
    const auto dim = out.front()->dim();
    for (auto s : out) {
        if (s->dim() != dim) {
            throw DimensionMismatch("summaries differ in dimension");
        }
    }
    return out;
}

}

/**
 * Mean of the sample covariances of all genes that have one.
 */
inline SymMatrix mean_covariance(std::span<const GeneSummary> summaries) {
    auto genes = ebayes_internal::usable(summaries);
    const auto dim = genes.front()->dim();
    Matrix total = Matrix::Zero(dim, dim);
    for (auto s : genes) {
        total += s->s.matrix();
    }
    return SymMatrix(total / static_cast<double>(genes.size()));
}

/**
 * Moderated covariance, `((df) S + nu Lambda) / (df + nu)` with `df` the residual degrees of freedom.
 * An infinite `nu` returns `Lambda`; `nu = 0` returns `S`.
 */
inline SymMatrix moderate_covariance(const SymMatrix& s, double resid_df, double nu, const SymMatrix& lambda) {
    if (!(nu >= 0)) {
        throw ParameterOutOfRange("nu must be non-negative");
    }
    if (std::isinf(nu)) {
        return lambda;
    }
    if (nu == 0) {
        return s;
    }
    if (lambda.dim() != s.dim()) {
        throw DimensionMismatch("common matrix does not match the sample covariance");
    }
    return SymMatrix((resid_df * s.matrix() + nu * lambda.matrix()) / (resid_df + nu));
}

/**
 * @brief Moderated t vector and its squared norm.
 */
struct ModeratedSummary {
    SymMatrix s_tilde;
    Vector t_tilde;
    double t2 = 0;
    double effective_n = 0;
    double df_numerator = 0;
    double df_denominator = 0;
};

/**
 * Moderated t vector `sqrt(n) S~^{-1/2} xbar`.
 */
inline Vector moderated_t(const Vector& xbar, const SymMatrix& s_tilde, double effective_n) {
    if (xbar.size() != s_tilde.dim()) {
        throw DimensionMismatch("mean and covariance differ in dimension");
    }
    return std::sqrt(effective_n) * (inv_sqrt(s_tilde).matrix() * xbar);
}

/**
 * Moderate a gene summary with the supplied `nu` and `lambda`.
 */
inline ModeratedSummary moderate(const GeneSummary& gene, double nu, const SymMatrix& lambda) {
    ModeratedSummary out;
    out.s_tilde = moderate_covariance(gene.s, gene.df, nu, lambda);
    out.t_tilde = moderated_t(gene.xbar, out.s_tilde, gene.effective_n);
    out.t2 = out.t_tilde.squaredNorm();
    out.effective_n = gene.effective_n;
    out.df_numerator = gene.dim();
    out.df_denominator = std::isinf(nu) ? infinity : gene.df + 1 + nu - gene.dim();
    return out;
}

/**
 * Estimate `nu`, `lambda` and optionally `eta` from per-gene summaries of any design.
 * The summaries must share a dimension; constancy summaries are handled in their transformed coordinates.
 * User overrides replace the corresponding estimates, and a user `nu` still floors the stage used for `lambda`.
 */
inline Hyperparameters estimate_hyperparameters(std::span<const GeneSummary> summaries, const HyperOverrides& user = HyperOverrides(), const EstimationOptions& options = EstimationOptions()) {
    auto genes = ebayes_internal::usable(summaries);
    const auto dim = genes.front()->dim();

    Hyperparameters out;
    out.p = user.p.value_or(options.p);
    if (!(out.p > 0 && out.p < 1)) {
        throw ParameterOutOfRange("p must lie in (0, 1)");
    }

    if (!user.nu) {
        std::vector<double> variances(genes.size()), df(genes.size());
        for (Eigen::Index j = 0; j < dim; ++j) {
            for (std::size_t g = 0; g < genes.size(); ++g) {
                variances[g] = genes[g]->s(j, j);
                df[g] = genes[g]->df;
            }
            out.nu_per_timepoint.push_back(fit_prior_variance(variances, df).df);
        }
        out.provenance.nu = Provenance::ESTIMATED;
    }
    auto nu = estimate_nu(out.nu_per_timepoint, dim, user.nu);
    out.nu = nu.final;
    out.nu_stage1 = nu.stage1;

    if (user.lambda) {
        if (user.lambda->dim() != dim) {
            throw DimensionMismatch("user common matrix has dimension " + std::to_string(user.lambda->dim()) + ", expected " + std::to_string(dim));
        }
        out.lambda = *user.lambda;
    } else {
        out.lambda = estimate_lambda(mean_covariance(summaries), nu.stage1, dim);
        out.provenance.lambda = Provenance::ESTIMATED;
    }

    if (user.eta) {
        out.eta = *user.eta;
    } else if (options.estimate_eta) {
        Matrix t(genes.size(), dim);
        std::vector<double> ns(genes.size());
        std::vector<TCoordinateLaw> laws(genes.size());
        for (std::size_t g = 0; g < genes.size(); ++g) {
            const auto mod = moderate(*genes[g], out.nu, out.lambda);
            t.row(g) = mod.t_tilde.transpose();
            ns[g] = genes[g]->effective_n;
            laws[g] = t_coordinate_law(genes[g]->df, out.nu, dim);
        }
        auto est = estimate_eta(t, ns, laws, out.p);
        out.eta = est.eta;
        out.eta_per_column = std::move(est.per_column);
        out.eta_fallback = est.fallback;
        out.provenance.eta = Provenance::ESTIMATED;
    }

    if (user.xi) { out.xi = *user.xi; }
    if (user.lambda_sq) { out.lambda_sq = *user.lambda_sq; }
    if (user.theta) { out.theta = *user.theta; }
    if (user.kappa) { out.kappa = *user.kappa; }
    if (user.tau) { out.tau = *user.tau; }
    return out;
}

/**
 * Hyperparameters for the constancy design. On top of `estimate_hyperparameters()` on the transformed statistics,
 * the level-channel prior `(xi, lambda_sq)` is fitted to the level-channel variances.
 */
inline Hyperparameters estimate_constancy_hypers(std::span<const GeneSummary> summaries, const HyperOverrides& user = HyperOverrides(), const EstimationOptions& options = EstimationOptions()) {
    auto out = estimate_hyperparameters(summaries, user, options);

    std::vector<double> variances, df;
    for (const auto& s : summaries) {
        if (s.design != Design::CONSTANCY) {
            throw DimensionMismatch("constancy hyperparameters need constancy summaries");
        }
        if (s.df >= 1) {
            variances.push_back(s.level_var);
            df.push_back(s.df);
        }
    }
    if (!user.xi || !user.lambda_sq) {
        auto fit = fit_prior_variance(variances, df);
        if (!user.xi) {
            out.xi = fit.df;
            out.provenance.xi = Provenance::ESTIMATED;
        }
        if (!user.lambda_sq) {
            out.lambda_sq = fit.scale;
            out.provenance.lambda_sq = Provenance::ESTIMATED;
        }
    }
    return out;
}

/**
 * @cond
 */
namespace ebayes_internal {

inline std::string format_double(double x) {
    if (std::isinf(x)) {
        return x > 0 ? "inf" : "-inf";
    }
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.17g", x);
    return buffer;
}

inline double parse_double(const std::string& s, const std::string& context) {
    std::string t = s;
    t.erase(0, t.find_first_not_of(" \t\r"));
    t.erase(t.find_last_not_of(" \t\r") + 1);
    if (t == "inf" || t == "Inf" || t == "infinity") {
        return infinity;
    }
    std::size_t used = 0;
    double out;
    try {
        out = std::stod(t, &used);
    } catch (const std::exception&) {
        throw ParseError(context + ": cannot parse '" + t + "' as a number");
    }
    if (used != t.size()) {
        throw ParseError(context + ": trailing characters in '" + t + "'");
    }
    return out;
}

}
/**
 * @endcond
 */

/**
 * Write a matrix as comma-separated rows with 17 significant digits.
 */
inline void write_matrix_csv(const std::string& path, const SymMatrix& m) {
    std::ofstream out(path);
    if (!out) {
        throw ParseError("cannot open " + path + " for writing");
    }
    for (Eigen::Index i = 0; i < m.dim(); ++i) {
        for (Eigen::Index j = 0; j < m.dim(); ++j) {
            if (j) {
                out << ',';
            }
            out << ebayes_internal::format_double(m(i, j));
        }
        out << '\n';
    }
}

inline SymMatrix read_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open " + path);
    }
    std::vector<std::vector<double> > rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            row.push_back(ebayes_internal::parse_double(cell, path + ":" + std::to_string(lineno)));
        }
        rows.push_back(std::move(row));
    }
    const auto n = rows.size();
    if (n == 0) {
        throw ParseError(path + ": empty matrix");
    }
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].size() != n) {
            throw ParseError(path + ": matrix is not square");
        }
        for (std::size_t j = 0; j < n; ++j) {
            m(i, j) = rows[i][j];
        }
    }
    return SymMatrix(m);
}

/**
 * Write hyperparameters as `name = value` lines, with provenance keys and the common matrix in a CSV sidecar.
 *
 * @param path Destination of the key-value file.
 * @param lambda_path Destination of the CSV sidecar, referenced from the key-value file relative to its directory.
 */
inline void write_hyperparameters(const std::string& path, const Hyperparameters& h, const std::string& lambda_path) {
    std::ofstream out(path);
    if (!out) {
        throw ParseError("cannot open " + path + " for writing");
    }
    auto put = [&](const char* name, double value, Provenance prov) {
        out << name << " = " << ebayes_internal::format_double(value) << '\n';
        out << name << "_provenance = " << to_string(prov) << '\n';
    };
    put("nu", h.nu, h.provenance.nu);
    put("eta", h.eta, h.provenance.eta);
    put("p", h.p, h.provenance.p);
    put("xi", h.xi, h.provenance.xi);
    put("lambda_sq", h.lambda_sq, h.provenance.lambda_sq);
    put("theta", h.theta, h.provenance.theta);
    put("kappa", h.kappa, h.provenance.kappa);
    put("tau", h.tau, h.provenance.tau);
    if (h.has_lambda()) {
        // Readers resolve the sidecar against the directory of the key-value file.
        const auto base = std::filesystem::path(path).parent_path();
        out << "lambda_file = " << std::filesystem::path(lambda_path).lexically_proximate(base.empty() ? std::filesystem::path(".") : base).string() << '\n';
        out << "lambda_provenance = " << to_string(h.provenance.lambda) << '\n';
        write_matrix_csv(lambda_path, h.lambda);
    }
}

/**
 * Parse a `name = value` file into key-value pairs. Blank lines and `#` comments are ignored.
 */
inline std::map<std::string, std::string> read_key_values(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open " + path);
    }
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t lineno = 0;
    auto trim = [](std::string s) {
        s.erase(0, s.find_first_not_of(" \t\r"));
        s.erase(s.find_last_not_of(" \t\r") + 1);
        return s;
    };
    while (std::getline(in, line)) {
        ++lineno;
        auto t = trim(line);
        if (t.empty() || t[0] == '#') {
            continue;
        }
        auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected 'name = value'");
        }
        out[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
    }
    return out;
}

/**
 * Read a hyperparameter file as user overrides. Provenance keys are ignored, since anything read back is user-set.
 * A relative `lambda_file` is resolved against the directory of `path`.
 */
inline HyperOverrides read_hyperparameters(const std::string& path) {
    auto kv = read_key_values(path);
    HyperOverrides out;
    auto grab = [&](const char* name, std::optional<double>& dest) {
        auto it = kv.find(name);
        if (it != kv.end()) {
            dest = ebayes_internal::parse_double(it->second, path + " key " + name);
        }
    };
    grab("nu", out.nu);
    grab("eta", out.eta);
    grab("p", out.p);
    grab("xi", out.xi);
    grab("lambda_sq", out.lambda_sq);
    grab("theta", out.theta);
    grab("kappa", out.kappa);
    grab("tau", out.tau);

    // NaN entries mean "not set".
    for (auto* opt : { &out.nu, &out.eta, &out.p, &out.xi, &out.lambda_sq, &out.theta, &out.kappa, &out.tau }) {
        if (*opt && std::isnan(**opt)) {
            opt->reset();
        }
    }

    auto it = kv.find("lambda_file");
    if (it != kv.end()) {
        std::string lpath = it->second;
        if (!lpath.empty() && lpath[0] != '/') {
            auto slash = path.find_last_of('/');
            if (slash != std::string::npos) {
                lpath = path.substr(0, slash + 1) + lpath;
            }
        }
        out.lambda = read_matrix_csv(lpath);
    }
    return out;
}

}

#endif
