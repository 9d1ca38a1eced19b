#include <gtest/gtest.h>

#include "tcrank/tcrank.hpp"
#include "generators.hpp"

using namespace tcrank;

namespace {

GeneData make_gene(const std::string& id, const std::vector<Vector>& reps) {
    GeneData g;
    g.id = id;
    g.conditions.resize(1);
    for (std::size_t r = 0; r < reps.size(); ++r) {
        g.conditions[0].push_back(Replicate{ "r" + std::to_string(r + 1), reps[r] });
    }
    return g;
}

ExpressionDataset empty_dataset(Eigen::Index k) {
    ExpressionDataset d;
    d.conditions = { "A" };
    for (Eigen::Index j = 0; j < k; ++j) {
        d.time_labels.push_back(std::to_string(j));
    }
    return d;
}

AnalysisOptions user_options(Eigen::Index dim) {
    AnalysisOptions o;
    o.user.nu = 5;
    o.user.eta = 0.1;
    o.user.lambda = SymMatrix::identity(dim);
    return o;
}

LabeledDataset constancy_data(std::size_t genes, std::size_t nonconstant, std::uint64_t seed) {
    SimulationConfig config;
    config.genes = genes;
    config.nonconstant = nonconstant;
    config.seed = seed;
    return simulate_dataset(config, 0);
}

std::vector<std::string> ordered_ids(const RankingResult& r) {
    std::vector<std::string> out;
    for (auto o : r.order) {
        out.push_back(r.scores[o].gene);
    }
    return out;
}

}

TEST(RankGenes, SingleGene) {
    auto d = empty_dataset(3);
    gen::Source src(60);
    d.genes.push_back(make_gene("only", src.replicates(3, 3)));
    const auto r = rank_genes(d, StatisticKind::MB, NullSpec::zero_mean(), user_options(3));
    ASSERT_EQ(r.order.size(), 1u);
    EXPECT_EQ(r.scores[r.order[0]].gene, "only");
}

TEST(RankGenes, NonzeroGeneRanksFirst) {
    auto d = empty_dataset(3);
    d.genes.push_back(make_gene("zero", { Vector::Zero(3), Vector::Zero(3), Vector::Zero(3) }));
    gen::Source src(61);
    auto reps = src.replicates(3, 3, 0.1);
    for (auto& r : reps) {
        r.array() += 10;
    }
    d.genes.push_back(make_gene("big", reps));
    const auto r = rank_genes(d, StatisticKind::MB, NullSpec::zero_mean(), user_options(3));
    EXPECT_EQ(r.scores[r.order[0]].gene, "big");
}

TEST(RankGenes, SingleReplicateGenesAreSkipped) {
    auto d = empty_dataset(2);
    gen::Source src(62);
    d.genes.push_back(make_gene("a", src.replicates(3, 2)));
    d.genes.push_back(make_gene("b", src.replicates(1, 2)));
    auto r = rank_genes(d, StatisticKind::MODERATED_HOTELLING, NullSpec::zero_mean(), user_options(2));
    ASSERT_EQ(r.skipped.size(), 1u);
    EXPECT_EQ(r.skipped[0].gene, "b");

    // The MB statistic ranks unreplicated genes when every hyperparameter is user-set.
    r = rank_genes(d, StatisticKind::MB, NullSpec::zero_mean(), user_options(2));
    EXPECT_EQ(r.scores.size(), 2u);
}

TEST(RankGenes, UnsupportedCombinations) {
    auto d = empty_dataset(2);
    gen::Source src(63);
    d.genes.push_back(make_gene("a", src.replicates(3, 2)));
    EXPECT_THROW(rank_genes(d, StatisticKind::ANOVA_F, NullSpec::zero_mean()), UnsupportedStatistic);
    EXPECT_THROW(rank_genes(d, StatisticKind::MB_TWO_SAMPLE, NullSpec::constant_mean()), UnsupportedStatistic);
    EXPECT_THROW(rank_genes(d, StatisticKind::MB, NullSpec::equal_two_sample()), DimensionMismatch);
}

TEST(RankGenes, MbAndT2OrderingsAgreeForEqualReplicates) {
    const auto data = constancy_data(1000, 20, 64);
    auto opts = AnalysisOptions();
    const auto by_mb = rank_genes(data.dataset, StatisticKind::MB, NullSpec::constant_mean(), opts);
    opts.sort_by_t2 = true;
    const auto by_t2 = rank_genes(data.dataset, StatisticKind::MB, NullSpec::constant_mean(), opts);
    EXPECT_EQ(ordered_ids(by_mb), ordered_ids(by_t2));
}

TEST(RankGenes, PriorProportionDoesNotChangeOrder) {
    const auto data = constancy_data(1000, 20, 65);
    AnalysisOptions a, b;
    a.user.eta = 0.05;
    b.user.eta = 0.05;
    a.user.p = 0.02;
    b.user.p = 0.4;
    const auto ra = rank_genes(data.dataset, StatisticKind::MB, NullSpec::constant_mean(), a);
    const auto rb = rank_genes(data.dataset, StatisticKind::MB, NullSpec::constant_mean(), b);
    EXPECT_EQ(ordered_ids(ra), ordered_ids(rb));
}

TEST(RankGenes, ConstancyLevelPriorsAreInert) {
    const auto data = constancy_data(1000, 20, 66);
    AnalysisOptions a, b;
    b.user.xi = 17;
    b.user.lambda_sq = 0.001;
    b.user.theta = -4;
    b.user.kappa = 300;
    b.user.tau = 9;
    const auto ra = rank_genes(data.dataset, StatisticKind::MB, NullSpec::constant_mean(), a);
    const auto rb = rank_genes(data.dataset, StatisticKind::MB, NullSpec::constant_mean(), b);
    ASSERT_EQ(ra.scores.size(), rb.scores.size());
    for (std::size_t g = 0; g < ra.scores.size(); ++g) {
        EXPECT_NEAR(ra.scores[g].mb, rb.scores[g].mb, 1e-12 * std::max(1.0, std::abs(ra.scores[g].mb)));
    }
}

TEST(RankGenes, GenePermutationPermutesResults) {
    const auto data = constancy_data(300, 10, 67);
    auto permuted = data.dataset;
    std::reverse(permuted.genes.begin(), permuted.genes.end());
    const auto opts = user_options(7);
    for (auto kind : comparison_statistics) {
        const auto a = rank_genes(data.dataset, kind, NullSpec::constant_mean(), opts);
        const auto b = rank_genes(permuted, kind, NullSpec::constant_mean(), opts);
        ASSERT_EQ(a.scores.size(), b.scores.size());
        std::map<std::string, double> lookup;
        for (const auto& s : b.scores) {
            lookup[s.gene] = s.statistic;
        }
        for (const auto& s : a.scores) {
            // pooled quantities sum in a different order, so only the last bits may move
            EXPECT_NEAR(s.statistic, lookup.at(s.gene), 1e-12 * std::max(1.0, std::abs(s.statistic))) << to_string(kind);
        }
    }
}

TEST(RankGenes, EveryComparisonStatisticRuns) {
    const auto data = constancy_data(1000, 20, 68);
    for (auto kind : comparison_statistics) {
        const auto r = rank_genes(data.dataset, kind, NullSpec::constant_mean());
        EXPECT_EQ(r.scores.size(), 1000u) << to_string(kind);
        EXPECT_TRUE(r.skipped.empty()) << to_string(kind);
    }
}

TEST(RankGenes, EtaBarelyAffectsRankings) {
    const auto data = constancy_data(2000, 40, 69);
    const auto base = rank_genes(data.dataset, StatisticKind::MB, NullSpec::constant_mean());
    for (double eta : { 2.0, 1.0, 0.08, 0.05, 0.001 }) {
        AnalysisOptions o;
        o.user.eta = eta;
        const auto r = rank_genes(data.dataset, StatisticKind::MB, NullSpec::constant_mean(), o);
        std::vector<double> a, b;
        for (std::size_t g = 0; g < r.scores.size(); ++g) {
            a.push_back(base.scores[g].mb);
            b.push_back(r.scores[g].mb);
        }
        EXPECT_GE(spearman(a, b), 0.9) << "eta = " << eta;
    }
}

TEST(RankGenes, FirstDifferencesTrackConstancyMb) {
    const auto data = constancy_data(2000, 40, 70);
    std::vector<std::string> ids;
    for (const auto& g : data.dataset.genes) {
        ids.push_back(g.id);
    }
    const auto mb = fp_fn_curve(rank_genes(data.dataset, StatisticKind::MB, NullSpec::constant_mean()), ids, data.truth, 40, 80);
    const auto fd = fp_fn_curve(rank_genes(data.dataset, StatisticKind::MB_FIRST_DIFF, NullSpec::constant_mean()), ids, data.truth, 40, 80);
    for (std::size_t x = 40; x <= 80; ++x) {
        EXPECT_LE(std::abs(mb.fp_at(x) - fd.fp_at(x)), 2) << "x = " << x;
    }
}

TEST(RankGenes, TwoConditionDesigns) {
    TwoSampleConfig config;
    config.genes = 1000;
    config.nonnull = 20;
    config.lambda = SymMatrix::identity(3).scaled(0.02);
    const auto data = simulate_two_sample(config);

    AnalysisOptions unpaired;
    unpaired.paired = false;
    const auto r = rank_genes(data.dataset, StatisticKind::MB, NullSpec::equal_two_sample(), unpaired);
    EXPECT_EQ(r.design, Design::UNPAIRED_TWO_SAMPLE);
    EXPECT_EQ(r.scores.size(), 1000u);
    EXPECT_EQ(r.scores[0].n, 7);

    // Labels z1.. and y1.. never match, so pairing skips every gene and ranking has nothing left.
    const auto paired = summarize_dataset(data.dataset, NullSpec::equal_two_sample());
    EXPECT_EQ(paired.design, Design::PAIRED);
    EXPECT_TRUE(paired.summaries.empty());
    EXPECT_EQ(paired.skipped.size(), 1000u);
    EXPECT_THROW(rank_genes(data.dataset, StatisticKind::MODERATED_HOTELLING, NullSpec::equal_two_sample(), user_options(3)), TooFewGenes);
}

TEST(Summaries, DatasetSummariesMatchDirectCalls) {
    const auto data = constancy_data(200, 5, 71);
    const auto s = summarize_dataset(data.dataset, NullSpec::constant_mean());
    ASSERT_EQ(s.summaries.size(), 200u);
    const auto direct = summarize_constancy(replicate_values(data.dataset.genes[7]), helmert(8));
    EXPECT_EQ(s.summaries[7].xbar, direct.xbar);
    EXPECT_EQ(s.ids[7], data.dataset.genes[7].id);
}
