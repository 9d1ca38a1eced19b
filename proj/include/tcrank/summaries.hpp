#ifndef TCRANK_SUMMARIES_HPP
#define TCRANK_SUMMARIES_HPP

#include "errors.hpp"
#include "matlin.hpp"

#include <cmath>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

/**
 * @file summaries.hpp
 * @brief Expression dataset model and per-gene sufficient statistics.
 */

namespace tcrank {

/**
 * @brief One replicate time course of a gene: a complete k-vector of log-scale expression values.
 */
struct Replicate {
    std::string label;
    Vector values;
};

/**
 * @brief All replicate time courses of a gene, grouped by condition.
 */
struct GeneData {
    std::string id;

    /**
     * One entry per condition of the enclosing dataset, in the same order as `ExpressionDataset::conditions`.
     */
    std::vector<std::vector<Replicate> > conditions;
};

/**
 * @brief Replicated time-course expression data for many genes under one or two conditions.
 */
struct ExpressionDataset {
    std::vector<std::string> time_labels;
    std::vector<std::string> conditions;
    std::vector<GeneData> genes;

    Eigen::Index k() const { return static_cast<Eigen::Index>(time_labels.size()); }
};

/**
 * @brief A gene that was excluded from an analysis, with the reason.
 */
struct SkippedGene {
    std::string gene;
    std::string reason;
};

enum class NullKind : unsigned char { ZERO_MEAN, KNOWN_MEAN, CONSTANT_MEAN, EQUAL_TWO_SAMPLE };

/**
 * @brief Null hypothesis for the mean temporal profile.
 */
struct NullSpec {
    NullKind kind = NullKind::ZERO_MEAN;

    /**
     * Known mean profile, only used when `kind` is `KNOWN_MEAN`.
     */
    Vector mu0;

    /**
     * Transformation used to isolate the non-constant part, only used when `kind` is `CONSTANT_MEAN`.
     */
    ContrastKind contrast = ContrastKind::HELMERT;

    static NullSpec zero_mean() { return NullSpec(); }

    static NullSpec known_mean(Vector mu) {
        NullSpec out;
        out.kind = NullKind::KNOWN_MEAN;
        out.mu0 = std::move(mu);
        return out;
    }

    static NullSpec constant_mean(ContrastKind c = ContrastKind::HELMERT) {
        NullSpec out;
        out.kind = NullKind::CONSTANT_MEAN;
        out.contrast = c;
        return out;
    }

    static NullSpec equal_two_sample() {
        NullSpec out;
        out.kind = NullKind::EQUAL_TWO_SAMPLE;
        return out;
    }
};

enum class Design : unsigned char { ONE_SAMPLE, PAIRED, UNPAIRED_TWO_SAMPLE, CONSTANCY };

/**
 * @brief Per-gene sufficient statistics.
 *
 * For the constancy design, `xbar` and `s` hold the transformed statistics of the `k - 1` contrast rows,
 * while `level_mean` and `level_var` hold the replicate-average channel.
 */
struct GeneSummary {
    Design design = Design::ONE_SAMPLE;

    /**
     * Number of replicates (for the unpaired design, the size of the second condition).
     */
    int n = 0;

    /**
     * Size of the first condition in the unpaired design, zero otherwise.
     */
    int m = 0;

    /**
     * Precision factor of `xbar`: `n`, or `mn/(m+n)` in the unpaired design.
     */
    double effective_n = 0;

    /**
     * Residual degrees of freedom of `s`: `n - 1`, or `m + n - 2` in the unpaired design.
     */
    double df = 0;

    Vector xbar;

    /**
     * Sample covariance with divisor `df`. Empty when `n = 1`.
     */
    SymMatrix s;

    /**
     * Mean of `sqrt(k)` times the per-replicate averages over time (constancy design only).
     */
    double level_mean = 0;

    /**
     * Sample variance of `sqrt(k)` times the per-replicate averages over time (constancy design only).
     */
    double level_var = 0;

    Eigen::Index dim() const { return xbar.size(); }

    bool has_covariance() const { return !s.empty(); }
};

namespace summaries_internal {

inline void check_replicates(std::span<const Vector> reps, std::size_t minimum) {
    if (reps.size() < minimum) {
        throw InsufficientReplicates("need at least " + std::to_string(minimum) + " replicates, got " + std::to_string(reps.size()));
    }
    const auto k = reps.front().size();
    for (const auto& r : reps) {
        if (r.size() != k) {
            throw DimensionMismatch("replicates have different lengths");
        }
        if (!r.allFinite()) {
            throw NonFiniteValue("replicate contains a non-finite value");
        }
    }
}

inline Vector mean_of(std::span<const Vector> reps) {
    Vector out = Vector::Zero(reps.front().size());
    for (const auto& r : reps) {
        out += r;
    }
    return out / static_cast<double>(reps.size());
}

// Unscaled sum of squared deviations around the mean.
inline Matrix scatter(std::span<const Vector> reps, const Vector& mean) {
    const auto k = mean.size();
    Matrix out = Matrix::Zero(k, k);
    for (const auto& r : reps) {
        Vector d = r - mean;
        out.noalias() += d * d.transpose();
    }
    return out;
}

}

/**
 * Mean and sample covariance (divisor `n - 1`) of a set of replicate vectors.
 */
inline std::pair<Vector, SymMatrix> sample_mean_covariance(std::span<const Vector> reps) {
    summaries_internal::check_replicates(reps, 2);
    Vector mean = summaries_internal::mean_of(reps);
    Matrix sc = summaries_internal::scatter(reps, mean);
    return { std::move(mean), SymMatrix(sc / static_cast<double>(reps.size() - 1)) };
}

/**
 * Summary for the one-sample (or already differenced paired) design.
 * Under a known-mean null, `xbar` is shifted by `mu0`.
 */
inline GeneSummary summarize_one_sample(std::span<const Vector> replicates, const NullSpec& null = NullSpec::zero_mean()) {
    auto stats = sample_mean_covariance(replicates);
    GeneSummary out;
    out.design = Design::ONE_SAMPLE;
    out.n = static_cast<int>(replicates.size());
    out.effective_n = out.n;
    out.df = out.n - 1;
    out.xbar = std::move(stats.first);
    out.s = std::move(stats.second);
    if (null.kind == NullKind::KNOWN_MEAN) {
        if (null.mu0.size() != out.xbar.size()) {
            throw DimensionMismatch("known mean has the wrong length");
        }
        out.xbar -= null.mu0;
    }
    return out;
}

/**
 * Summary of a gene with a single replicate. The covariance is left undefined.
 */
inline GeneSummary summarize_single(const Vector& x, const NullSpec& null = NullSpec::zero_mean()) {
    summaries_internal::check_replicates(std::span<const Vector>(&x, 1), 1);
    GeneSummary out;
    out.design = Design::ONE_SAMPLE;
    out.n = 1;
    out.effective_n = 1;
    out.df = 0;
    out.xbar = x;
    if (null.kind == NullKind::KNOWN_MEAN) {
        if (null.mu0.size() != x.size()) {
            throw DimensionMismatch("known mean has the wrong length");
        }
        out.xbar -= null.mu0;
    }
    return out;
}

/**
 * Summary for the unpaired two-sample design: `xbar` is `mean(z) - mean(y)` and `s` is the pooled covariance with divisor `m + n - 2`.
 */
inline GeneSummary summarize_unpaired(std::span<const Vector> z, std::span<const Vector> y) {
    summaries_internal::check_replicates(z, 1);
    summaries_internal::check_replicates(y, 1);
    if (z.size() + y.size() < 3) {
        throw InsufficientReplicates("unpaired design needs m + n >= 3");
    }
    if (z.front().size() != y.front().size()) {
        throw DimensionMismatch("conditions have different numbers of time points");
    }

    const Vector zbar = summaries_internal::mean_of(z);
    const Vector ybar = summaries_internal::mean_of(y);
    Matrix pooled = summaries_internal::scatter(z, zbar) + summaries_internal::scatter(y, ybar);

    GeneSummary out;
    out.design = Design::UNPAIRED_TWO_SAMPLE;
    out.m = static_cast<int>(z.size());
    out.n = static_cast<int>(y.size());
    out.effective_n = static_cast<double>(out.m) * out.n / (out.m + out.n);
    out.df = out.m + out.n - 2;
    out.xbar = zbar - ybar;
    out.s = SymMatrix(pooled / out.df);
    return out;
}

/**
 * Summary for the constancy null. Each replicate is transformed by the contrast rows, giving
 * the `k - 1` dimensional mean and covariance of the non-constant part, plus the mean and variance of
 * the level channel, i.e., `sqrt(k)` times the per-replicate averages over time.
 */
inline GeneSummary summarize_constancy(std::span<const Vector> replicates, const ContrastMatrix& contrast) {
    summaries_internal::check_replicates(replicates, 2);
    const auto k = replicates.front().size();
    if (contrast.k() != k) {
        throw DimensionMismatch("contrast has dimension " + std::to_string(contrast.k()) + " but replicates have " + std::to_string(k));
    }

    const Matrix t1 = contrast.contrasts();
    std::vector<Vector> transformed;
    transformed.reserve(replicates.size());
    std::vector<double> levels;
    levels.reserve(replicates.size());
    for (const auto& r : replicates) {
        transformed.emplace_back(t1 * r);
        levels.push_back(std::sqrt(static_cast<double>(k)) * r.mean());
    }

    auto stats = sample_mean_covariance(transformed);
    GeneSummary out;
    out.design = Design::CONSTANCY;
    out.n = static_cast<int>(replicates.size());
    out.effective_n = out.n;
    out.df = out.n - 1;
    out.xbar = std::move(stats.first);
    out.s = std::move(stats.second);

    double lm = 0;
    for (auto l : levels) {
        lm += l;
    }
    lm /= levels.size();
    double lv = 0;
    for (auto l : levels) {
        lv += (l - lm) * (l - lm);
    }
    out.level_mean = lm;
    out.level_var = lv / (levels.size() - 1);
    return out;
}

/**
 * Differences between consecutive time points within each replicate.
 */
inline std::vector<Vector> first_differences(std::span<const Vector> replicates) {
    std::vector<Vector> out;
    out.reserve(replicates.size());
    for (const auto& r : replicates) {
        if (r.size() < 2) {
            throw InvalidDimension("first differences need k >= 2");
        }
        const auto k = r.size();
        out.emplace_back(r.tail(k - 1) - r.head(k - 1));
    }
    return out;
}

/**
 * @return Replicate value vectors of a gene under one condition.
 */
inline std::vector<Vector> replicate_values(const GeneData& gene, std::size_t condition = 0) {
    std::vector<Vector> out;
    out.reserve(gene.conditions.at(condition).size());
    for (const auto& r : gene.conditions[condition]) {
        out.push_back(r.values);
    }
    return out;
}

/**
 * Within-replicate differences `first - second` of a single gene with two conditions.
 * Replicates are paired by label; the order of replicates within a condition is irrelevant.
 */
inline GeneData paired_difference(const GeneData& gene, std::size_t first = 0) {
    if (gene.conditions.size() != 2 || first > 1) {
        throw DimensionMismatch("paired differences need exactly two conditions");
    }
    const auto& a = gene.conditions[first];
    const auto& b = gene.conditions[1 - first];
    std::unordered_map<std::string, const Replicate*> lookup;
    for (const auto& r : b) {
        lookup[r.label] = &r;
    }
    if (lookup.size() != a.size() || b.size() != a.size()) {
        throw UnpairedReplicate("gene " + gene.id + " has different replicate sets in the two conditions");
    }

    GeneData diff;
    diff.id = gene.id;
    diff.conditions.resize(1);
    for (const auto& r : a) {
        auto it = lookup.find(r.label);
        if (it == lookup.end()) {
            throw UnpairedReplicate("gene " + gene.id + " replicate '" + r.label + "' has no partner");
        }
        if (r.values.size() != it->second->values.size()) {
            throw DimensionMismatch("gene " + gene.id + " replicate '" + r.label + "' has different lengths in the two conditions");
        }
        diff.conditions[0].push_back(Replicate{ r.label, r.values - it->second->values });
    }
    return diff;
}

/**
 * Apply `paired_difference()` to every gene of a two-condition dataset.
 *
 * @param dataset Dataset with exactly two conditions.
 * @param first Index of the condition from which the other is subtracted.
 */
inline ExpressionDataset paired_differences(const ExpressionDataset& dataset, std::size_t first = 0) {
    if (dataset.conditions.size() != 2 || first > 1) {
        throw DimensionMismatch("paired differences need exactly two conditions");
    }
    ExpressionDataset out;
    out.time_labels = dataset.time_labels;
    out.conditions = { dataset.conditions[first] + "-" + dataset.conditions[1 - first] };
    out.genes.reserve(dataset.genes.size());
    for (const auto& gene : dataset.genes) {
        out.genes.push_back(paired_difference(gene, first));
    }
    return out;
}

}

#endif
