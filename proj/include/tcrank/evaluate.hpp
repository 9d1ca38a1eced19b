#ifndef TCRANK_EVALUATE_HPP
#define TCRANK_EVALUATE_HPP

#include "ebayes.hpp"
#include "errors.hpp"
#include "matlin.hpp"
#include "pipeline.hpp"
#include "simulate.hpp"
#include "stats.hpp"
#include "summaries.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

/**
 * @file evaluate.hpp
 * @brief Scoring of rankings against simulation truth, rank correlations and hyperparameter recovery.
 */

namespace tcrank {

/**
 * @brief False positive and false negative counts of the top `x` genes, for each integer cutoff `x`.
 */
struct FpFnCurve {
    std::string statistic;
    std::size_t x_min = 0;
    std::size_t x_max = 0;

    /**
     * Counts (or means across datasets) for `x = x_min, ..., x_max`.
     */
    std::vector<double> fp, fn;

    /**
     * Number of datasets averaged into this curve.
     */
    std::size_t datasets = 1;

    double fp_at(std::size_t x) const { return fp.at(x - x_min); }
    double fn_at(std::size_t x) const { return fn.at(x - x_min); }
};

/**
 * Truth labels of the ranked genes, in rank order.
 *
 * @param ranking Ranking whose genes must all appear in `ids`.
 * @param ids Gene identifiers, parallel to `truth`.
 * @param truth 1 for non-null genes, 0 otherwise.
 */
inline std::vector<int> ranked_truth(const RankingResult& ranking, std::span<const std::string> ids, std::span<const int> truth) {
    if (ids.size() != truth.size()) {
        throw TruthMismatch("gene identifiers and truth labels differ in length");
    }
    std::unordered_map<std::string, int> lookup;
    lookup.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        lookup[ids[i]] = truth[i];
    }
    std::vector<int> out;
    out.reserve(ranking.order.size());
    for (auto o : ranking.order) {
        auto it = lookup.find(ranking.scores[o].gene);
        if (it == lookup.end()) {
            throw TruthMismatch("no truth label for gene " + ranking.scores[o].gene);
        }
        out.push_back(it->second);
    }
    return out;
}

/**
 * FP/FN counts from truth labels in rank order.
 *
 * @param ranked Truth labels in rank order.
 * @param total_nonnull Number of non-null genes, including any that were not ranked.
 */
inline FpFnCurve fp_fn_curve(std::span<const int> ranked, std::size_t total_nonnull, std::size_t x_min, std::size_t x_max) {
    if (x_min > x_max) {
        throw ParameterOutOfRange("x_min exceeds x_max");
    }
    if (x_max > ranked.size()) {
        throw TruthMismatch("cutoff " + std::to_string(x_max) + " exceeds the " + std::to_string(ranked.size()) + " ranked genes");
    }
    FpFnCurve out;
    out.x_min = x_min;
    out.x_max = x_max;
    std::size_t tp = 0;
    for (std::size_t x = 1; x <= x_max; ++x) {
        const int t = ranked[x - 1];
        if (t != 0 && t != 1) {
            throw TruthMismatch("truth labels must be 0 or 1");
        }
        tp += t;
        if (x >= x_min) {
            out.fp.push_back(static_cast<double>(x - tp));
            out.fn.push_back(static_cast<double>(total_nonnull - tp));
        }
    }
    return out;
}

/**
 * FP/FN counts of a ranking against per-gene truth labels.
 */
inline FpFnCurve fp_fn_curve(const RankingResult& ranking, std::span<const std::string> ids, std::span<const int> truth, std::size_t x_min, std::size_t x_max) {
    auto ranked = ranked_truth(ranking, ids, truth);
    const auto total = static_cast<std::size_t>(std::count(truth.begin(), truth.end(), 1));
    auto out = fp_fn_curve(ranked, total, x_min, x_max);
    out.statistic = to_string(ranking.kind);
    return out;
}

/**
 * Per-cutoff means of curves from several datasets.
 */
inline FpFnCurve average_curves(std::span<const FpFnCurve> curves) {
    if (curves.empty()) {
        throw LengthMismatch("no curves to average");
    }
    FpFnCurve out = curves.front();
    out.datasets = 0;
    std::fill(out.fp.begin(), out.fp.end(), 0);
    std::fill(out.fn.begin(), out.fn.end(), 0);
    for (const auto& c : curves) {
        if (c.x_min != out.x_min || c.x_max != out.x_max) {
            throw LengthMismatch("curves cover different cutoffs");
        }
        for (std::size_t i = 0; i < out.fp.size(); ++i) {
            out.fp[i] += c.fp[i] * c.datasets;
            out.fn[i] += c.fn[i] * c.datasets;
        }
        out.datasets += c.datasets;
    }
    for (std::size_t i = 0; i < out.fp.size(); ++i) {
        out.fp[i] /= out.datasets;
        out.fn[i] /= out.datasets;
    }
    return out;
}

/**
 * Mahalanobis distance of a mean profile from its average level, `sqrt((mu - P mu)' Sigma^-1 (mu - P mu))`.
 */
inline double mahalanobis_deviation(const Vector& mu, const SymMatrix& sigma) {
    if (mu.size() != sigma.dim()) {
        throw DimensionMismatch("mean and covariance differ in dimension");
    }
    const Vector dev = mu.array() - mu.mean();
    const Matrix l = cholesky(sigma);
    const Vector w = l.triangularView<Eigen::Lower>().solve(dev);
    return w.norm();
}

/**
 * Ranks with ties replaced by their average, starting from 1.
 */
inline std::vector<double> mid_ranks(std::span<const double> x) {
    const auto n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> out(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i + 1;
        while (j < n && x[order[j]] == x[order[i]]) {
            ++j;
        }
        const double r = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (std::size_t l = i; l < j; ++l) {
            out[order[l]] = r;
        }
        i = j;
    }
    return out;
}

/**
 * Spearman rank correlation, the Pearson correlation of mid-ranks.
 * Returns NaN if either input is constant.
 */
inline double spearman(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw LengthMismatch("inputs differ in length");
    }
    if (a.size() < 2) {
        throw LengthMismatch("need at least two observations");
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::isnan(a[i]) || std::isnan(b[i])) {
            throw NonFiniteValue("NaN in rank correlation input");
        }
    }
    const auto ra = mid_ranks(a), rb = mid_ranks(b);
    const double n = static_cast<double>(a.size());
    const double mean = (n + 1) / 2;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        const double da = ra[i] - mean, db = rb[i] - mean;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0 || sbb == 0) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return sab / std::sqrt(saa * sbb);
}

/**
 * Weight of the common matrix in the moderated covariance, as a percentage: `100 nu / (nu + resid_df)`.
 * For one-sample data `resid_df = n - 1`.
 */
inline double percent_moderation(double nu, double resid_df) {
    if (std::isinf(nu)) {
        return 100;
    }
    return 100 * nu / (nu + resid_df);
}

/**
 * @brief One row of a moderation sweep.
 */
struct SweepRow {
    double nu;
    double percent_moderation;

    /**
     * Spearman correlation with the baseline over all genes.
     */
    double rho_all;

    /**
     * Spearman correlation with the baseline over the baseline's top genes.
     */
    double rho_top;
};

/**
 * @brief Options for `moderation_sweep()`.
 */
struct SweepOptions {
    /**
     * Number of top genes of the baseline ranking used for `SweepRow::rho_top`.
     */
    std::size_t top = 859;
};

/**
 * Default grid of prior degrees of freedom.
 */
inline std::vector<double> default_nu_grid() {
    return { 100, 12, 2, 1, 0.01 };
}

/**
 * Moderated T-squared of every gene at each `nu`, with a fixed common matrix, compared with the values at `baseline_nu`.
 *
 * @param summaries Gene summaries, all with a sample covariance and the same residual degrees of freedom.
 */
inline std::vector<SweepRow> moderation_sweep(std::span<const GeneSummary> summaries, std::span<const double> nu_grid, double baseline_nu, const SymMatrix& lambda, const SweepOptions& options = SweepOptions()) {
    if (summaries.size() < 2) {
        throw TooFewGenes("sweep needs at least two genes");
    }
    const double df = summaries.front().df;
    for (const auto& s : summaries) {
        if (!s.has_covariance()) {
            throw InsufficientReplicates("sweep needs sample covariances for every gene");
        }
        if (s.df != df) {
            throw DimensionMismatch("sweep needs equal replicate counts");
        }
    }

    auto compute = [&](double nu) {
        std::vector<double> out(summaries.size());
        for (std::size_t g = 0; g < summaries.size(); ++g) {
            out[g] = moderate(summaries[g], nu, lambda).t2;
        }
        return out;
    };
    const auto base = compute(baseline_nu);

    std::vector<std::size_t> order(base.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return base[a] > base[b]; });
    const std::size_t ntop = std::min(options.top, order.size());
    std::vector<double> base_top(ntop);
    for (std::size_t i = 0; i < ntop; ++i) {
        base_top[i] = base[order[i]];
    }

    std::vector<SweepRow> rows;
    for (auto nu : nu_grid) {
        const auto cur = compute(nu);
        SweepRow row;
        row.nu = nu;
        row.percent_moderation = percent_moderation(nu, df);
        row.rho_all = spearman(base, cur);
        if (ntop >= 2) {
            std::vector<double> cur_top(ntop);
            for (std::size_t i = 0; i < ntop; ++i) {
                cur_top[i] = cur[order[i]];
            }
            row.rho_top = spearman(base_top, cur_top);
        } else {
            row.rho_top = std::numeric_limits<double>::quiet_NaN();
        }
        rows.push_back(row);
    }
    return rows;
}

/**
 * @brief Mean and standard deviation of one hyperparameter across datasets.
 */
struct RecoveryRow {
    std::string name;
    double truth = std::numeric_limits<double>::quiet_NaN();
    double mean = 0;
    double sd = std::numeric_limits<double>::quiet_NaN();
    std::size_t count = 0;
};

/**
 * Recovery of `nu`, `eta` and the diagonal of the common matrix across datasets.
 * Standard deviations use the `n - 1` divisor and are NaN for a single dataset.
 *
 * @param estimates Estimated hyperparameters, one per dataset.
 * @param truth Optional true values; unset fields are reported as NaN.
 */
inline std::vector<RecoveryRow> recovery_table(std::span<const Hyperparameters> estimates, const Hyperparameters* truth = nullptr) {
    if (estimates.empty()) {
        return {};
    }
    std::vector<RecoveryRow> rows;
    auto add = [&](const std::string& name, auto getter, double truth_value) {
        RecoveryRow row;
        row.name = name;
        row.truth = truth_value;
        std::vector<double> values;
        for (const auto& h : estimates) {
            values.push_back(getter(h));
        }
        row.count = values.size();
        row.mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
        if (values.size() >= 2) {
            double ss = 0;
            for (auto v : values) {
                ss += (v - row.mean) * (v - row.mean);
            }
            row.sd = std::sqrt(ss / (values.size() - 1));
        }
        rows.push_back(row);
    };

    const double nan = std::numeric_limits<double>::quiet_NaN();
    add("nu", [](const Hyperparameters& h) { return h.nu; }, truth ? truth->nu : nan);
    add("eta", [](const Hyperparameters& h) { return h.eta; }, truth ? truth->eta : nan);
    const auto dim = estimates.front().lambda.dim();
    for (Eigen::Index j = 0; j < dim; ++j) {
        const double t = (truth && truth->has_lambda()) ? truth->lambda(j, j) : nan;
        add("lambda_" + std::to_string(j + 1), [j](const Hyperparameters& h) { return h.lambda(j, j); }, t);
    }
    return rows;
}

/**
 * @brief Accumulates FP/FN curves and hyperparameter estimates over simulated datasets.
 */
class ComparisonAccumulator {
public:
    /**
     * @param kinds Statistics to compare.
     * @param null Null hypothesis of the simulation.
     * @param x_min Smallest cutoff.
     * @param x_max Largest cutoff.
     * @param options Analysis options, applied to every dataset.
     */
    ComparisonAccumulator(std::vector<StatisticKind> kinds, NullSpec null, std::size_t x_min, std::size_t x_max, AnalysisOptions options = AnalysisOptions()) :
        my_kinds(std::move(kinds)), my_null(std::move(null)), my_x_min(x_min), my_x_max(x_max), my_options(std::move(options)), my_curves(my_kinds.size()) {}

    /**
     * Rank one dataset by every statistic, with hyperparameters estimated afresh.
     * Failures of individual statistics are recorded and do not stop the other statistics.
     */
    void add(const LabeledDataset& data) {
        std::vector<std::string> ids;
        ids.reserve(data.dataset.genes.size());
        for (const auto& g : data.dataset.genes) {
            ids.push_back(g.id);
        }

        for (std::size_t s = 0; s < my_kinds.size(); ++s) {
            try {
                auto ranking = rank_genes(data.dataset, my_kinds[s], my_null, my_options);
                my_curves[s].push_back(fp_fn_curve(ranking, ids, data.truth, my_x_min, my_x_max));
                if (my_kinds[s] == StatisticKind::MB && ranking.hypers) {
                    my_hypers.push_back(*ranking.hypers);
                }
            } catch (const Error& e) {
                my_failures.push_back("dataset " + std::to_string(my_datasets) + " " + to_string(my_kinds[s]) + ": " + e.what());
            }
        }
        ++my_datasets;
    }

    /**
     * @return Dataset-averaged curve for each statistic that succeeded at least once.
     */
    std::vector<FpFnCurve> curves() const {
        std::vector<FpFnCurve> out;
        for (const auto& c : my_curves) {
            if (!c.empty()) {
                out.push_back(average_curves(c));
            }
        }
        return out;
    }

    /**
     * @return Per-dataset curves of the statistic at position `s` of the requested kinds.
     */
    const std::vector<FpFnCurve>& dataset_curves(std::size_t s) const {
        return my_curves.at(s);
    }

    /**
     * @return Hyperparameters estimated for the MB statistic, one per dataset.
     */
    const std::vector<Hyperparameters>& hypers() const {
        return my_hypers;
    }

    const std::vector<std::string>& failures() const {
        return my_failures;
    }

    std::size_t datasets() const {
        return my_datasets;
    }

private:
    std::vector<StatisticKind> my_kinds;
    NullSpec my_null;
    std::size_t my_x_min, my_x_max;
    AnalysisOptions my_options;
    std::vector<std::vector<FpFnCurve> > my_curves;
    std::vector<Hyperparameters> my_hypers;
    std::vector<std::string> my_failures;
    std::size_t my_datasets = 0;
};

/**
 * True hyperparameters of a constancy simulation, in the form used by `recovery_table()`.
 */
inline Hyperparameters simulation_truth(const SimulationConfig& config) {
    Hyperparameters h;
    h.nu = config.nu;
    h.lambda = config.lambda1;
    h.eta = config.eta;
    h.xi = config.xi;
    h.lambda_sq = config.lambda_sq;
    h.theta = config.theta;
    h.kappa = config.kappa;
    return h;
}

}

#endif
