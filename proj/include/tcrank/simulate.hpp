#ifndef TCRANK_SIMULATE_HPP
#define TCRANK_SIMULATE_HPP

#include "errors.hpp"
#include "matlin.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "summaries.hpp"

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

/**
 * @file simulate.hpp
 * @brief Simulation of replicated time courses from the hierarchical model.
 */

namespace tcrank {

/**
 * Inverse-Wishart draw whose inverse is Wishart with `nu` degrees of freedom and scale `(nu Lambda)^-1`,
 * so that its mean is `nu Lambda / (nu - dim - 1)`. Uses the Bartlett decomposition.
 */
inline SymMatrix sample_inv_wishart(double nu, const SymMatrix& lambda, Rng& rng) {
    const auto dim = lambda.dim();
    if (!(nu > dim - 1)) {
        throw ParameterOutOfRange("inverse-Wishart needs nu > dim - 1");
    }

    // With nu Lambda = U U' and W = U'^-1 A A' U^-1 for Bartlett factor A, the draw is (U A'^-1)(U A'^-1)'.
    const Matrix u = cholesky(lambda.scaled(nu));
    Matrix a = Matrix::Zero(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        a(i, i) = std::sqrt(rng.chi_squared(nu - i));
        for (Eigen::Index j = 0; j < i; ++j) {
            a(i, j) = rng.normal();
        }
    }
    const Matrix at_inv_t = a.transpose().triangularView<Eigen::Upper>().solve(Matrix::Identity(dim, dim));
    const Matrix b = u * at_inv_t;
    return SymMatrix(b * b.transpose());
}

/**
 * Draw from a multivariate normal with mean `mu` and covariance factor `chol` (lower triangular).
 */
inline Vector sample_mvn(const Vector& mu, const Matrix& chol, Rng& rng) {
    Vector z(mu.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        z[i] = rng.normal();
    }
    return mu + chol * z;
}

/**
 * Common matrix of the non-constant channels used by the default simulation, for eight time points.
 */
inline SymMatrix default_lambda1() {
    Matrix m(7, 7);
    m << 14.69,  0.57,  0.99,  0.40,  0.55,  0.51, -0.23,
          0.57, 15.36,  1.22,  0.84,  1.19,  0.91,  0.86,
          0.99,  1.22, 14.41,  2.47,  1.81,  1.51,  1.07,
          0.40,  0.84,  2.47, 17.05,  2.40,  2.32,  1.33,
          0.55,  1.19,  1.81,  2.40, 15.63,  3.31,  2.75,
          0.51,  0.91,  1.51,  2.32,  3.31, 13.38,  3.15,
         -0.23,  0.86,  1.07,  1.33,  2.75,  3.15, 12.90;
    return SymMatrix(m * 1e-3);
}

/**
 * @brief Settings of the constancy simulation.
 */
struct SimulationConfig {
    std::size_t num_datasets = 100;
    std::size_t genes = 20000;
    std::size_t nonconstant = 400;
    int n = 3;
    Eigen::Index k = 8;

    double nu = 13;
    double xi = 3;
    double lambda_sq = 0.3;
    double theta = 0;
    double kappa = 0.02;
    double eta = 0.08;

    /**
     * Common matrix of the `k - 1` Helmert channels.
     */
    SymMatrix lambda1 = default_lambda1();

    std::uint64_t seed = 1;

    /**
     * Whether to shuffle the gene order after placing the non-constant genes first.
     */
    bool shuffle = false;

    int num_threads = 1;

    void validate() const {
        if (nonconstant > genes) {
            throw ParameterOutOfRange("more non-constant genes than genes");
        }
        if (k < 2 || n < 1) {
            throw ParameterOutOfRange("need k >= 2 and n >= 1");
        }
        if (lambda1.dim() != k - 1) {
            throw DimensionMismatch("common matrix must have dimension k - 1");
        }
        if (!(nu > k - 2) || !(xi > 0) || !(lambda_sq > 0) || !(kappa > 0) || !(eta > 0)) {
            throw ParameterOutOfRange("scale parameters must be positive and nu > k - 2");
        }
    }
};

/**
 * @brief One simulated gene with its latent parameters.
 */
struct SimulatedGene {
    std::vector<Vector> replicates;
    Vector mu;
    SymMatrix sigma;
};

/**
 * Simulate one gene of the constancy model.
 * The level channel has variance `sigma^2 ~ inv-gamma(xi / 2, xi lambda_sq / 2)` and mean `N(theta, sigma^2 / kappa)`;
 * the Helmert channels have covariance `inv-Wishart(nu, nu Lambda_1)` and, for non-constant genes, mean `N(0, Sigma_1 / eta)`.
 */
inline SimulatedGene simulate_gene(bool nonconstant, const SimulationConfig& config, Rng& rng) {
    const auto k = config.k;
    const auto t = helmert(k).rows;

    const double sigma0 = rng.inv_gamma(config.xi / 2, config.xi * config.lambda_sq / 2);
    const auto sigma1 = sample_inv_wishart(config.nu, config.lambda1, rng);
    const Matrix l1 = cholesky(sigma1);

    Vector tmu(k);
    tmu[0] = config.theta + std::sqrt(sigma0 / config.kappa) * rng.normal();
    if (nonconstant) {
        tmu.tail(k - 1) = sample_mvn(Vector::Zero(k - 1), l1 / std::sqrt(config.eta), rng);
    } else {
        tmu.tail(k - 1).setZero();
    }

    Matrix block = Matrix::Zero(k, k);
    block(0, 0) = sigma0;
    block.bottomRightCorner(k - 1, k - 1) = sigma1.matrix();

    SimulatedGene out;
    out.mu = t.transpose() * tmu;
    out.sigma = SymMatrix(t.transpose() * block * t);
    const Matrix chol = cholesky(out.sigma);
    out.replicates.reserve(config.n);
    for (int i = 0; i < config.n; ++i) {
        out.replicates.push_back(sample_mvn(out.mu, chol, rng));
    }
    return out;
}

/**
 * @brief Simulated dataset with the truth labels and latent parameters of every gene.
 */
struct LabeledDataset {
    ExpressionDataset dataset;

    /**
     * 1 for genes drawn under the alternative, 0 otherwise.
     */
    std::vector<int> truth;

    /**
     * Latent mean of each gene; for two-sample data, the difference of the two condition means.
     */
    std::vector<Vector> mu;

    std::vector<SymMatrix> sigma;
};

namespace simulate_internal {

inline std::string gene_name(std::size_t g, std::size_t total) {
    std::string num = std::to_string(g + 1);
    const std::size_t width = std::to_string(total).size();
    return "g" + std::string(width > num.size() ? width - num.size() : 0, '0') + num;
}

inline std::vector<std::string> time_labels(Eigen::Index k) {
    std::vector<std::string> out;
    for (Eigen::Index j = 0; j < k; ++j) {
        out.push_back(std::to_string(j + 1));
    }
    return out;
}

inline std::vector<Replicate> label(std::vector<Vector> reps, const std::string& prefix) {
    std::vector<Replicate> out;
    out.reserve(reps.size());
    for (std::size_t i = 0; i < reps.size(); ++i) {
        out.push_back(Replicate{ prefix + std::to_string(i + 1), std::move(reps[i]) });
    }
    return out;
}

// Deterministic Fisher-Yates permutation of the gene order.
inline void shuffle(LabeledDataset& data, std::uint64_t seed, std::size_t dataset) {
    Rng rng = Rng::substream(seed ^ 0x5bd1e995ULL, dataset, ~static_cast<std::uint64_t>(0));
    const auto ngenes = data.truth.size();
    for (std::size_t i = ngenes; i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.uniform() * i);
        std::swap(data.dataset.genes[i - 1], data.dataset.genes[j]);
        std::swap(data.truth[i - 1], data.truth[j]);
        std::swap(data.mu[i - 1], data.mu[j]);
        std::swap(data.sigma[i - 1], data.sigma[j]);
    }
}

template<class Generator_>
LabeledDataset generate(std::size_t ngenes, std::size_t nonnull, Eigen::Index k, std::vector<std::string> conditions, std::uint64_t seed, std::size_t dataset, int num_threads, Generator_ gen) {
    LabeledDataset out;
    out.dataset.time_labels = time_labels(k);
    out.dataset.conditions = std::move(conditions);
    out.dataset.genes.resize(ngenes);
    out.truth.resize(ngenes);
    out.mu.resize(ngenes);
    out.sigma.resize(ngenes);

    parallel_for(ngenes, num_threads, [&](std::size_t start, std::size_t end) {
        for (std::size_t g = start; g < end; ++g) {
            Rng rng = Rng::substream(seed, dataset, g);
            const bool alt = g < nonnull;
            out.truth[g] = alt;
            out.dataset.genes[g].id = gene_name(g, ngenes);
            gen(alt, rng, out.dataset.genes[g], out.mu[g], out.sigma[g]);
        }
    });
    return out;
}

}

/**
 * Simulate one dataset of the constancy study. Each gene draws from its own random substream of `(seed, dataset, gene)`,
 * so any dataset can be regenerated on its own. The first `nonconstant` genes are non-constant unless `shuffle` is set.
 */
inline LabeledDataset simulate_dataset(const SimulationConfig& config, std::size_t dataset) {
    config.validate();
    auto out = simulate_internal::generate(config.genes, config.nonconstant, config.k, { "A" }, config.seed, dataset, config.num_threads,
        [&](bool alt, Rng& rng, GeneData& gene, Vector& mu, SymMatrix& sigma) {
            auto sim = simulate_gene(alt, config, rng);
            gene.conditions.push_back(simulate_internal::label(std::move(sim.replicates), "r"));
            mu = std::move(sim.mu);
            sigma = std::move(sim.sigma);
        }
    );
    if (config.shuffle) {
        simulate_internal::shuffle(out, config.seed, dataset);
    }
    return out;
}

/**
 * Simulate every dataset of the study, passing each to `consumer(index, dataset)` in order.
 */
template<class Consumer_>
void simulate_study(const SimulationConfig& config, Consumer_ consumer) {
    config.validate();
    for (std::size_t d = 0; d < config.num_datasets; ++d) {
        consumer(d, simulate_dataset(config, d));
    }
}

/**
 * @brief Settings of a simulation where each gene has a zero mean under the null.
 */
struct ZeroMeanConfig {
    std::size_t genes = 2000;
    std::size_t nonnull = 40;
    int n = 4;
    double nu = 5;
    double eta = 0.08;

    /**
     * Common matrix, which also sets the number of time points.
     */
    SymMatrix lambda;

    std::uint64_t seed = 1;
    int num_threads = 1;
};

/**
 * Simulate a one-condition dataset with `Sigma ~ inv-Wishart(nu, nu Lambda)` and mean zero, or `N(0, Sigma / eta)` for non-null genes.
 */
inline LabeledDataset simulate_zero_mean(const ZeroMeanConfig& config, std::size_t dataset = 0) {
    if (config.lambda.empty() || config.nonnull > config.genes || config.n < 1) {
        throw ParameterOutOfRange("invalid zero-mean simulation settings");
    }
    const auto k = config.lambda.dim();
    return simulate_internal::generate(config.genes, config.nonnull, k, { "A" }, config.seed, dataset, config.num_threads,
        [&](bool alt, Rng& rng, GeneData& gene, Vector& mu, SymMatrix& sigma) {
            sigma = sample_inv_wishart(config.nu, config.lambda, rng);
            const Matrix chol = cholesky(sigma);
            mu = alt ? sample_mvn(Vector::Zero(k), chol / std::sqrt(config.eta), rng) : Vector::Zero(k);
            std::vector<Vector> reps;
            for (int i = 0; i < config.n; ++i) {
                reps.push_back(sample_mvn(mu, chol, rng));
            }
            gene.conditions.push_back(simulate_internal::label(std::move(reps), "r"));
        }
    );
}

/**
 * @brief Settings of an unpaired two-sample simulation.
 */
struct TwoSampleConfig {
    std::size_t genes = 2000;
    std::size_t nonnull = 40;
    int m = 3;
    int n = 4;
    double nu = 13;
    double eta = 0.08;
    SymMatrix lambda;
    std::uint64_t seed = 1;
    int num_threads = 1;
};

/**
 * Simulate two independent conditions sharing a covariance `Sigma ~ inv-Wishart(nu, nu Lambda)`.
 * The second condition has mean zero and the first has mean zero, or `N(0, Sigma / eta)` for non-null genes.
 */
inline LabeledDataset simulate_two_sample(const TwoSampleConfig& config, std::size_t dataset = 0) {
    if (config.lambda.empty() || config.nonnull > config.genes || config.m < 1 || config.n < 1) {
        throw ParameterOutOfRange("invalid two-sample simulation settings");
    }
    const auto k = config.lambda.dim();
    return simulate_internal::generate(config.genes, config.nonnull, k, { "Z", "Y" }, config.seed, dataset, config.num_threads,
        [&](bool alt, Rng& rng, GeneData& gene, Vector& mu, SymMatrix& sigma) {
            sigma = sample_inv_wishart(config.nu, config.lambda, rng);
            const Matrix chol = cholesky(sigma);
            mu = alt ? sample_mvn(Vector::Zero(k), chol / std::sqrt(config.eta), rng) : Vector::Zero(k);
            std::vector<Vector> z, y;
            for (int i = 0; i < config.m; ++i) {
                z.push_back(sample_mvn(mu, chol, rng));
            }
            for (int i = 0; i < config.n; ++i) {
                y.push_back(sample_mvn(Vector::Zero(k), chol, rng));
            }
            gene.conditions.push_back(simulate_internal::label(std::move(z), "z"));
            gene.conditions.push_back(simulate_internal::label(std::move(y), "y"));
        }
    );
}

}

#endif
