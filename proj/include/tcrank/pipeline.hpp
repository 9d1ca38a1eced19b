#ifndef TCRANK_PIPELINE_HPP
#define TCRANK_PIPELINE_HPP

#include "ebayes.hpp"
#include "errors.hpp"
#include "matlin.hpp"
#include "parallel.hpp"
#include "stats.hpp"
#include "summaries.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

/**
 * @file pipeline.hpp
 * @brief Gene ranking from a dataset: summarization, hyperparameter estimation and scoring for each statistic.
 */

namespace tcrank {

/**
 * @brief Options for `rank_genes()`.
 */
struct AnalysisOptions {
    /**
     * User-defined hyperparameters, replacing the corresponding estimates.
     */
    HyperOverrides user;

    /**
     * Prior proportion of non-null genes, unless set in `user`.
     */
    double p = 0.02;

    /**
     * Transformation for the constant-mean null.
     */
    ContrastKind contrast = ContrastKind::HELMERT;

    /**
     * For the equal-means null on two conditions, whether replicates are paired by label.
     * For the other nulls, a two-condition dataset is always differenced by label first.
     */
    bool paired = true;

    /**
     * Rank by the moderated T-squared statistic instead of MB, where both are defined.
     * Ignored (with a note) when replicate counts differ between genes.
     */
    bool sort_by_t2 = false;

    int num_threads = 1;
};

/**
 * @brief Output of `rank_genes()`.
 */
struct RankingResult {
    StatisticKind kind = StatisticKind::MB;
    Design design = Design::ONE_SAMPLE;

    /**
     * Scores of all ranked genes, in input order.
     */
    std::vector<GeneScore> scores;

    /**
     * Indices into `scores` in rank order.
     */
    std::vector<std::size_t> order;

    std::vector<SkippedGene> skipped;

    /**
     * Hyperparameters used by the statistic, if any.
     */
    std::optional<Hyperparameters> hypers;

    /**
     * Additional key-value metadata, e.g., priors of the partly moderated F statistic.
     */
    std::vector<std::pair<std::string, std::string> > metadata;

    /**
     * Free-text notes on decisions taken during the analysis.
     */
    std::vector<std::string> notes;
};

namespace pipeline_internal {

inline std::string format(double x) {
    if (std::isinf(x)) {
        return x > 0 ? "inf" : "-inf";
    }
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.17g", x);
    return buffer;
}

/*
 * Replicate vectors of every gene after the design's preprocessing, with
 * genes that cannot be prepared moved to the skip list.
 */
struct Prepared {
    Design design;
    Eigen::Index k;
    std::vector<std::size_t> index; // position in the input dataset
    std::vector<std::string> ids;
    std::vector<std::vector<Vector> > first;
    std::vector<std::vector<Vector> > second; // unpaired design only
    std::vector<SkippedGene> skipped;
    std::vector<std::string> notes;
};

inline Prepared prepare(const ExpressionDataset& data, const NullSpec& null, const AnalysisOptions& options) {
    Prepared out;
    out.k = data.k();
    const auto nconds = data.conditions.size();
    if (nconds < 1 || nconds > 2) {
        throw DimensionMismatch("datasets must have one or two conditions");
    }

    bool difference = false;
    bool unpaired = false;
    switch (null.kind) {
        case NullKind::ZERO_MEAN:
        case NullKind::KNOWN_MEAN:
            out.design = (nconds == 2 ? Design::PAIRED : Design::ONE_SAMPLE);
            difference = (nconds == 2);
            break;
        case NullKind::CONSTANT_MEAN:
            out.design = Design::CONSTANCY;
            difference = (nconds == 2);
            break;
        case NullKind::EQUAL_TWO_SAMPLE:
            if (nconds != 2) {
                throw DimensionMismatch("the equal-means null needs two conditions");
            }
            if (options.paired) {
                out.design = Design::PAIRED;
                difference = true;
            } else {
                out.design = Design::UNPAIRED_TWO_SAMPLE;
                unpaired = true;
            }
            break;
    }
    if (difference) {
        out.notes.push_back("replicates differenced by label: " + data.conditions[0] + " - " + data.conditions[1]);
    }

    for (std::size_t g = 0; g < data.genes.size(); ++g) {
        const auto& gene = data.genes[g];
        try {
            if (unpaired) {
                out.first.push_back(replicate_values(gene, 0));
                out.second.push_back(replicate_values(gene, 1));
            } else if (difference) {
                out.first.push_back(replicate_values(paired_difference(gene, 0), 0));
            } else {
                out.first.push_back(replicate_values(gene, 0));
            }
            out.index.push_back(g);
            out.ids.push_back(gene.id);
        } catch (const Error& e) {
            out.skipped.push_back(SkippedGene{ gene.id, e.what() });
        }
    }
    return out;
}

inline bool in(StatisticKind kind, std::initializer_list<StatisticKind> allowed) {
    for (auto a : allowed) {
        if (a == kind) {
            return true;
        }
    }
    return false;
}

inline void check_supported(StatisticKind kind, Design design) {
    bool ok = true;
    switch (design) {
        case Design::ONE_SAMPLE:
        case Design::PAIRED:
            ok = !in(kind, { StatisticKind::MB_TWO_SAMPLE, StatisticKind::MB_CONSTANCY, StatisticKind::ANOVA_F, StatisticKind::PARTLY_MODERATED_F, StatisticKind::REPLICATE_VARIANCE });
            break;
        case Design::UNPAIRED_TWO_SAMPLE:
            ok = in(kind, { StatisticKind::MB, StatisticKind::MB_TWO_SAMPLE, StatisticKind::MB_SIGMA_DIAG, StatisticKind::MB_NU_INF, StatisticKind::MB_NU_ZERO, StatisticKind::MODERATED_HOTELLING, StatisticKind::MODERATED_LR });
            break;
        case Design::CONSTANCY:
            ok = (kind != StatisticKind::MB_TWO_SAMPLE);
            break;
    }
    if (!ok) {
        throw UnsupportedStatistic(std::string(to_string(kind)) + " is not defined for the " + to_string(design) + " design");
    }
}

/*
 * Summaries of the prepared genes, with per-gene failures moved to the skip list.
 * `valid` marks which prepared genes have a summary.
 */
struct SummarySet {
    std::vector<GeneSummary> summaries;
    std::vector<std::size_t> which; // index into Prepared
};

template<class Function_>
SummarySet summarize_all(const Prepared& prep, std::vector<SkippedGene>& skipped, Function_ fun) {
    SummarySet out;
    for (std::size_t i = 0; i < prep.ids.size(); ++i) {
        try {
            out.summaries.push_back(fun(i));
            out.which.push_back(i);
        } catch (const Error& e) {
            skipped.push_back(SkippedGene{ prep.ids[i], e.what() });
        }
    }
    return out;
}

inline GeneSummary summarize_gene(const Prepared& prep, std::size_t i, const NullSpec& null, const ContrastMatrix* contrast) {
    switch (prep.design) {
        case Design::UNPAIRED_TWO_SAMPLE:
            return summarize_unpaired(prep.first[i], prep.second[i]);
        case Design::CONSTANCY:
            return summarize_constancy(prep.first[i], *contrast);
        default: {
            const auto& reps = prep.first[i];
            if (reps.size() == 1) {
                return summarize_single(reps.front(), null);
            }
            auto s = summarize_one_sample(reps, null);
            s.design = prep.design;
            return s;
        }
    }
}

inline bool equal_replicates(const std::vector<GeneSummary>& s) {
    for (const auto& x : s) {
        if (x.n != s.front().n || x.m != s.front().m) {
            return false;
        }
    }
    return true;
}

inline int total_n(const GeneSummary& s) {
    return s.n + s.m;
}

inline bool all_user_set(const HyperOverrides& user) {
    return user.nu && user.lambda && user.eta;
}

inline Hyperparameters user_only(const HyperOverrides& user, double p) {
    Hyperparameters h;
    h.nu = *user.nu;
    h.nu_stage1 = *user.nu;
    h.lambda = *user.lambda;
    h.eta = *user.eta;
    h.p = user.p.value_or(p);
    return h;
}

// Per-gene scoring in parallel, with failures collected in gene order.
template<class Function_>
void score_all(const SummarySet& set, const Prepared& prep, RankingResult& result, int nthreads, Function_ fun) {
    const auto ngenes = set.summaries.size();
    std::vector<GeneScore> scores(ngenes);
    std::vector<std::string> failures(ngenes);
    std::vector<char> failed(ngenes, 0);
    parallel_for(ngenes, nthreads, [&](std::size_t start, std::size_t end) {
        for (std::size_t g = start; g < end; ++g) {
            try {
                scores[g] = fun(g);
                scores[g].gene = prep.ids[set.which[g]];
                scores[g].n = total_n(set.summaries[g]);
                if (std::isnan(scores[g].statistic)) {
                    throw DomainError("statistic is NaN");
                }
            } catch (const Error& e) {
                failed[g] = 1;
                failures[g] = e.what();
            }
        }
    });
    for (std::size_t g = 0; g < ngenes; ++g) {
        if (failed[g]) {
            result.skipped.push_back(SkippedGene{ prep.ids[set.which[g]], failures[g] });
        } else {
            result.scores.push_back(std::move(scores[g]));
        }
    }
}

inline HyperOverrides with_nu(HyperOverrides user, double nu) {
    user.nu = nu;
    return user;
}

inline EstimationOptions estimation(const AnalysisOptions& options, bool eta) {
    EstimationOptions out;
    out.p = options.user.p.value_or(options.p);
    out.estimate_eta = eta;
    return out;
}

// Drops user matrices of the wrong dimension, which happens when a statistic works in a different space.
inline HyperOverrides for_dimension(HyperOverrides user, Eigen::Index dim, RankingResult& result) {
    if (user.lambda && user.lambda->dim() != dim) {
        user.lambda.reset();
        result.notes.push_back("user common matrix ignored: statistic works in dimension " + std::to_string(dim));
    }
    return user;
}

inline Hyperparameters fit(const std::vector<GeneSummary>& s, Design design, const HyperOverrides& user, const EstimationOptions& est) {
    if (design == Design::CONSTANCY) {
        return estimate_constancy_hypers(s, user, est);
    }
    return estimate_hyperparameters(s, user, est);
}

inline void note_eta(const Hyperparameters& h, RankingResult& result) {
    if (h.eta_fallback) {
        result.notes.push_back("eta estimation fell back to 1 for at least one coordinate");
    }
}

// Statistics computed from the moderated T-squared: MB in its various designs.
inline void rank_mb(const Prepared& prep, const NullSpec& null, const ContrastMatrix* contrast, const AnalysisOptions& options, RankingResult& result) {
    auto set = summarize_all(prep, result.skipped, [&](std::size_t i) { return summarize_gene(prep, i, null, contrast); });
    if (set.summaries.empty()) {
        throw TooFewGenes("no genes could be summarized");
    }

    const auto dim = set.summaries.front().dim();
    const bool has_single = std::any_of(set.summaries.begin(), set.summaries.end(), [](const GeneSummary& s) { return !s.has_covariance(); });
    const bool has_replicated = std::any_of(set.summaries.begin(), set.summaries.end(), [](const GeneSummary& s) { return s.has_covariance(); });

    Hyperparameters h;
    if (all_user_set(options.user) && !has_replicated) {
        h = user_only(options.user, options.p);
    } else {
        h = fit(set.summaries, prep.design, options.user, estimation(options, true));
    }
    note_eta(h, result);
    if (h.lambda.dim() != dim) {
        throw DimensionMismatch("common matrix does not match the summaries");
    }

    const bool single_ok = all_user_set(options.user);
    if (has_single && !single_ok) {
        result.notes.push_back("genes with a single replicate need user-set nu, lambda and eta; they are skipped");
    }

    bool use_t2 = options.sort_by_t2;
    if (use_t2 && !equal_replicates(set.summaries)) {
        use_t2 = false;
        result.notes.push_back("replicate counts differ between genes: ranked by MB instead of T2");
    }

    const SymMatrix lambda_inv_sqrt = inv_sqrt(h.lambda);
    score_all(set, prep, result, options.num_threads, [&](std::size_t g) {
        const auto& s = set.summaries[g];
        GeneScore out;
        if (!s.has_covariance()) {
            if (!single_ok) {
                throw MissingHyperparameters("single replicate without user-set hyperparameters");
            }
            const Vector t = lambda_inv_sqrt.matrix() * s.xbar;
            out.t2 = t.squaredNorm();
            out.mb = posterior_odds(out.t2, 1, 0, static_cast<double>(dim), h.nu, h.eta, h.p).mb;
        } else {
            out.t2 = moderate(s, h.nu, h.lambda).t2;
            out.mb = posterior_odds(out.t2, s.effective_n, s.df, static_cast<double>(dim), h.nu, h.eta, h.p).mb;
        }
        out.statistic = use_t2 ? out.t2 : out.mb;
        return out;
    });
    result.hypers = std::move(h);
}

inline void rank_first_diff(const Prepared& prep, const AnalysisOptions& options, RankingResult& result) {
    Prepared diff = prep;
    diff.design = Design::ONE_SAMPLE;
    diff.k = prep.k - 1;
    for (auto& reps : diff.first) {
        reps = first_differences(reps);
    }
    AnalysisOptions opt = options;
    opt.user = for_dimension(options.user, diff.k, result);
    rank_mb(diff, NullSpec::zero_mean(), nullptr, opt, result);
}

inline void rank_sigma_diag(const Prepared& prep, const NullSpec& null, const ContrastMatrix* contrast, const AnalysisOptions& options, RankingResult& result) {
    auto set = summarize_all(prep, result.skipped, [&](std::size_t i) {
        auto s = summarize_gene(prep, i, null, contrast);
        if (!s.has_covariance()) {
            throw InsufficientReplicates("need at least two replicates");
        }
        return s;
    });
    if (set.summaries.empty()) {
        throw TooFewGenes("no genes could be summarized");
    }
    const auto dim = set.summaries.front().dim();

    // One scalar prior pooled over every coordinate of every gene.
    std::vector<double> variances, df;
    for (const auto& s : set.summaries) {
        for (Eigen::Index j = 0; j < dim; ++j) {
            variances.push_back(s.s(j, j));
            df.push_back(s.df);
        }
    }
    Hyperparameters h;
    h.p = options.user.p.value_or(options.p);
    if (!options.user.nu || !options.user.lambda_sq) {
        auto prior = fit_prior_variance(variances, df);
        h.nu = prior.df;
        h.lambda_sq = prior.scale;
        h.provenance.nu = h.provenance.lambda_sq = Provenance::ESTIMATED;
    }
    if (options.user.nu) {
        h.nu = *options.user.nu;
        h.provenance.nu = Provenance::USER_SET;
    }
    if (options.user.lambda_sq) {
        h.lambda_sq = *options.user.lambda_sq;
        h.provenance.lambda_sq = Provenance::USER_SET;
    }
    h.nu_stage1 = h.nu;
    h.lambda = SymMatrix::identity(dim).scaled(h.lambda_sq);
    h.provenance.lambda = h.provenance.lambda_sq;

    if (options.user.eta) {
        h.eta = *options.user.eta;
    } else {
        // Each coordinate is a univariate moderated t with resid_df + nu degrees of freedom.
        Matrix t(set.summaries.size(), dim);
        std::vector<double> ns(set.summaries.size());
        std::vector<TCoordinateLaw> laws(set.summaries.size());
        for (std::size_t g = 0; g < set.summaries.size(); ++g) {
            const auto& s = set.summaries[g];
            for (Eigen::Index j = 0; j < dim; ++j) {
                const double st = std::isinf(h.nu) ? h.lambda_sq : (s.df * s.s(j, j) + h.nu * h.lambda_sq) / (s.df + h.nu);
                t(g, j) = st > 0 ? std::sqrt(s.effective_n) * s.xbar[j] / std::sqrt(st) : 0;
            }
            ns[g] = s.effective_n;
            laws[g] = t_coordinate_law(s.df, h.nu, 1);
        }
        auto est = estimate_eta(t, ns, laws, h.p);
        h.eta = est.eta;
        h.eta_per_column = std::move(est.per_column);
        h.eta_fallback = est.fallback;
        h.provenance.eta = Provenance::ESTIMATED;
    }
    note_eta(h, result);

    score_all(set, prep, result, options.num_threads, [&](std::size_t g) {
        const auto& s = set.summaries[g];
        GeneScore out;
        out.mb = mb_sigma_diag(s.xbar, s.s.matrix().diagonal(), s.effective_n, s.df, h.nu, h.lambda_sq, h.eta, h.p).mb;
        out.statistic = out.mb;
        return out;
    });
    result.hypers = std::move(h);
}

inline void rank_nu_limit(bool infinite, const Prepared& prep, const NullSpec& null, const ContrastMatrix* contrast, const AnalysisOptions& options, RankingResult& result) {
    auto set = summarize_all(prep, result.skipped, [&](std::size_t i) {
        auto s = summarize_gene(prep, i, null, contrast);
        if (!s.has_covariance()) {
            throw InsufficientReplicates("need at least two replicates");
        }
        return s;
    });
    if (set.summaries.empty()) {
        throw TooFewGenes("no genes could be summarized");
    }
    const auto dim = set.summaries.front().dim();

    Hyperparameters h;
    if (infinite) {
        h = fit(set.summaries, prep.design, with_nu(options.user, std::numeric_limits<double>::infinity()), estimation(options, true));
    } else {
        // The t coordinates have no finite law without moderation when n <= dim, so eta comes from the standard fit.
        h = fit(set.summaries, prep.design, options.user, estimation(options, !options.user.eta));
        if (!options.user.eta) {
            result.notes.push_back("eta taken from the standard fit with estimated nu");
        }
        h.nu = 0;
        h.provenance.nu = Provenance::USER_SET;
    }
    note_eta(h, result);

    const SymMatrix lambda_inv_sqrt = inv_sqrt(h.lambda);
    score_all(set, prep, result, options.num_threads, [&](std::size_t g) {
        const auto& s = set.summaries[g];
        GeneScore out;
        if (infinite) {
            const Vector t = std::sqrt(s.effective_n) * (lambda_inv_sqrt.matrix() * s.xbar);
            out.t2 = t.squaredNorm();
        } else {
            out.t2 = unmoderated_t2(s.xbar, s.s, s.effective_n).t2;
        }
        out.mb = posterior_odds(out.t2, s.effective_n, s.df, static_cast<double>(dim), h.nu, h.eta, h.p).mb;
        out.statistic = out.mb;
        return out;
    });
    result.hypers = std::move(h);
}

inline void rank_hotelling(bool lr, const Prepared& prep, const NullSpec& null, const AnalysisOptions& options, RankingResult& result) {
    // Always in the original k time points, even for the constant-mean null.
    const bool constancy = (prep.design == Design::CONSTANCY);
    auto set = summarize_all(prep, result.skipped, [&](std::size_t i) {
        GeneSummary s;
        if (prep.design == Design::UNPAIRED_TWO_SAMPLE) {
            s = summarize_unpaired(prep.first[i], prep.second[i]);
        } else {
            if (prep.first[i].size() < 2) {
                throw InsufficientReplicates("need at least two replicates");
            }
            s = summarize_one_sample(prep.first[i], constancy ? NullSpec::zero_mean() : null);
        }
        if (s.df < 1) {
            throw InsufficientDegreesOfFreedom("need positive residual degrees of freedom");
        }
        return s;
    });
    if (set.summaries.empty()) {
        throw TooFewGenes("no genes could be summarized");
    }

    auto user = for_dimension(options.user, prep.k, result);
    auto h = estimate_hyperparameters(set.summaries, user, estimation(options, false));

    score_all(set, prep, result, options.num_threads, [&](std::size_t g) {
        const auto& s = set.summaries[g];
        const auto s_tilde = moderate_covariance(s.s, s.df, h.nu, h.lambda);
        Vector d = s.xbar;
        if (constancy) {
            d -= constancy_mle_shift(s.xbar, s_tilde);
        }
        const double total = (prep.design == Design::UNPAIRED_TWO_SAMPLE ? s.m + s.n : s.n);
        const auto res = moderated_lr(d, s_tilde, s.effective_n, s.df, total);
        GeneScore out;
        out.t2 = res.quadratic;
        out.statistic = lr ? res.lr : res.quadratic;
        return out;
    });
    result.hypers = std::move(h);
}

inline void rank_layout(StatisticKind kind, const Prepared& prep, const AnalysisOptions& options, RankingResult& result) {
    SummarySet set;
    std::vector<AnovaResult> anova;
    for (std::size_t i = 0; i < prep.ids.size(); ++i) {
        try {
            if (prep.first[i].size() < 2) {
                throw InsufficientReplicates("need at least two replicates");
            }
            if (kind != StatisticKind::REPLICATE_VARIANCE) {
                anova.push_back(anova_f(prep.first[i]));
            }
            GeneSummary s;
            s.n = static_cast<int>(prep.first[i].size());
            set.summaries.push_back(std::move(s));
            set.which.push_back(i);
        } catch (const Error& e) {
            result.skipped.push_back(SkippedGene{ prep.ids[i], e.what() });
        }
    }

    double d0 = 0, s0_sq = 0;
    if (kind == StatisticKind::PARTLY_MODERATED_F) {
        std::vector<double> variances, df;
        for (const auto& a : anova) {
            variances.push_back(a.ms_residual);
            df.push_back(a.df_residual);
        }
        auto prior = fit_prior_variance(variances, df);
        d0 = prior.df;
        s0_sq = prior.scale;
        result.metadata.emplace_back("d0", format(d0));
        result.metadata.emplace_back("s0_sq", format(s0_sq));
    }

    score_all(set, prep, result, options.num_threads, [&](std::size_t g) {
        GeneScore out;
        if (kind == StatisticKind::REPLICATE_VARIANCE) {
            out.statistic = replicate_variance(prep.first[set.which[g]]);
            return out;
        }
        const auto& a = anova[g];
        out.tiebreak = a.ms_time;
        if (a.zero_variance) {
            out.flag = "zero_variance";
        } else if (a.perfect_fit) {
            out.flag = "perfect_fit";
        }
        out.statistic = (kind == StatisticKind::ANOVA_F ? a.f : partly_moderated_f(a, d0, s0_sq));
        return out;
    });
}

}

/**
 * @brief Per-gene summaries of a dataset under a null, as used by the MB statistics.
 */
struct DatasetSummaries {
    Design design = Design::ONE_SAMPLE;
    std::vector<std::string> ids;
    std::vector<GeneSummary> summaries;
    std::vector<SkippedGene> skipped;
};

/**
 * Summarize every gene of a dataset, after the same differencing as `rank_genes()`.
 */
inline DatasetSummaries summarize_dataset(const ExpressionDataset& dataset, const NullSpec& null, const AnalysisOptions& options = AnalysisOptions()) {
    auto prep = pipeline_internal::prepare(dataset, null, options);
    std::optional<ContrastMatrix> contrast;
    if (prep.design == Design::CONSTANCY) {
        contrast = make_contrast(options.contrast, prep.k);
    }
    DatasetSummaries out;
    out.design = prep.design;
    out.skipped = prep.skipped;
    auto set = pipeline_internal::summarize_all(prep, out.skipped, [&](std::size_t i) {
        return pipeline_internal::summarize_gene(prep, i, null, contrast ? &*contrast : nullptr);
    });
    for (auto w : set.which) {
        out.ids.push_back(prep.ids[w]);
    }
    out.summaries = std::move(set.summaries);
    return out;
}

/**
 * Hyperparameters of the MB statistic for summarized data, with the user overrides in `options` applied.
 */
inline Hyperparameters fit_hyperparameters(const DatasetSummaries& data, const AnalysisOptions& options = AnalysisOptions()) {
    return pipeline_internal::fit(data.summaries, data.design, options.user, pipeline_internal::estimation(options, true));
}

/**
 * Rank the genes of a dataset by one statistic.
 * Hyperparameters are estimated from the dataset as needed by the statistic, unless supplied in `options.user`.
 * Genes that cannot be scored are moved to the skip list with the reason, without aborting the run.
 *
 * The design follows from the null and the number of conditions: a two-condition dataset is differenced by replicate label,
 * except for the equal-means null with `options.paired = false`, which uses the unpaired two-sample statistics.
 * `MB` resolves to the one-sample, two-sample or constancy MB of the design.
 */
inline RankingResult rank_genes(const ExpressionDataset& dataset, StatisticKind kind, const NullSpec& null, const AnalysisOptions& options = AnalysisOptions()) {
    auto prep = pipeline_internal::prepare(dataset, null, options);
    pipeline_internal::check_supported(kind, prep.design);

    RankingResult result;
    result.kind = kind;
    result.design = prep.design;
    result.skipped = prep.skipped;
    result.notes = prep.notes;

    std::optional<ContrastMatrix> contrast;
    if (prep.design == Design::CONSTANCY) {
        contrast = make_contrast(options.contrast, prep.k);
    }
    const ContrastMatrix* cptr = contrast ? &*contrast : nullptr;

    using namespace pipeline_internal;
    switch (kind) {
        case StatisticKind::MB:
        case StatisticKind::MB_TWO_SAMPLE:
        case StatisticKind::MB_CONSTANCY:
            rank_mb(prep, null, cptr, options, result);
            break;
        case StatisticKind::MB_FIRST_DIFF:
            rank_first_diff(prep, options, result);
            break;
        case StatisticKind::MB_SIGMA_DIAG:
            rank_sigma_diag(prep, null, cptr, options, result);
            break;
        case StatisticKind::MB_NU_INF:
            rank_nu_limit(true, prep, null, cptr, options, result);
            break;
        case StatisticKind::MB_NU_ZERO:
            rank_nu_limit(false, prep, null, cptr, options, result);
            break;
        case StatisticKind::MODERATED_HOTELLING:
            rank_hotelling(false, prep, null, options, result);
            break;
        case StatisticKind::MODERATED_LR:
            rank_hotelling(true, prep, null, options, result);
            break;
        case StatisticKind::ANOVA_F:
        case StatisticKind::PARTLY_MODERATED_F:
        case StatisticKind::REPLICATE_VARIANCE:
            rank_layout(kind, prep, options, result);
            break;
    }

    result.order = rank_order(result.scores);
    return result;
}

}

#endif
