#ifndef TCRANK_TESTS_ORACLE_CHECKS_HPP
#define TCRANK_TESTS_ORACLE_CHECKS_HPP

#include "tcrank/tcrank.hpp"
#include "frozen_oracles.hpp"
#include "generators.hpp"

#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

/*
 * Independent oracles for the derived reference values. Each check compares the library against a
 * computation that does not share its code path: frozen high-precision values, brute-force algorithms,
 * algebraic identities or Monte-Carlo moments.
 */

namespace oracle {

struct Outcome {
    bool ok = true;
    std::string detail;
};

struct Check {
    std::string name;
    std::function<Outcome()> run;
};

inline Outcome expect_close(double got, double want, double tol, const std::string& what) {
    Outcome o;
    o.ok = std::abs(got - want) <= tol;
    std::ostringstream ss;
    ss.precision(17);
    ss << what << ": got " << got << ", want " << want << ", tol " << tol;
    o.detail = ss.str();
    return o;
}

inline Outcome all(std::vector<Outcome> parts) {
    Outcome o;
    for (auto& p : parts) {
        if (!p.ok) {
            o.ok = false;
            o.detail += (o.detail.empty() ? "" : "; ") + p.detail;
        }
    }
    if (o.ok && !parts.empty()) {
        o.detail = parts.back().detail;
    }
    return o;
}

inline double rel_frobenius(const tcrank::Matrix& a, const tcrank::Matrix& b) {
    return (a - b).norm() / std::max(1.0, b.norm());
}

// Fraction-free Gaussian elimination on integer matrices, exact for small entries.
inline long long bareiss_determinant(std::vector<std::vector<long long> > m) {
    const auto n = m.size();
    long long sign = 1, prev = 1;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        if (m[k][k] == 0) {
            std::size_t swap = k + 1;
            while (swap < n && m[swap][k] == 0) {
                ++swap;
            }
            if (swap == n) {
                return 0;
            }
            std::swap(m[k], m[swap]);
            sign = -sign;
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            for (std::size_t j = k + 1; j < n; ++j) {
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
            }
        }
        prev = m[k][k];
    }
    return sign * m[n - 1][n - 1];
}

// Rank with ties averaged, by counting, then the Pearson correlation written out longhand.
inline double brute_force_spearman(const std::vector<double>& a, const std::vector<double>& b) {
    auto ranks = [](const std::vector<double>& x) {
        std::vector<double> r(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            double below = 0, equal = 0;
            for (std::size_t j = 0; j < x.size(); ++j) {
                if (x[j] < x[i]) {
                    below += 1;
                } else if (x[j] == x[i]) {
                    equal += 1;
                }
            }
            r[i] = below + (equal + 1) / 2;
        }
        return r;
    };
    const auto ra = ranks(a), rb = ranks(b);
    const double n = static_cast<double>(a.size());
    double sa = 0, sb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sa += ra[i];
        sb += rb[i];
    }
    const double ma = sa / n, mb = sb / n;
    double num = 0, da = 0, db = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (ra[i] - ma) * (rb[i] - mb);
        da += (ra[i] - ma) * (ra[i] - ma);
        db += (rb[i] - mb) * (rb[i] - mb);
    }
    return num / std::sqrt(da * db);
}

inline std::vector<Check> checks() {
    using namespace tcrank;
    std::vector<Check> out;

    // Linear algebra.
    out.push_back({ "cholesky_multiply_back", [] {
        const auto lambda = default_lambda1();
        const Matrix l = cholesky(lambda);
        const double err = rel_frobenius(l * l.transpose(), lambda.matrix());
        bool lower = true;
        for (Eigen::Index i = 0; i < l.rows(); ++i) {
            for (Eigen::Index j = i + 1; j < l.cols(); ++j) {
                lower = lower && l(i, j) == 0;
            }
        }
        auto o = expect_close(err, 0, 1e-10, "relative error of L L'");
        o.ok = o.ok && lower;
        return o;
    } });

    out.push_back({ "sym_eigen_characteristic_polynomial", [] {
        Matrix a(2, 2);
        a << 2, 1, 1, 2;
        const auto eig = sym_eigen(SymMatrix(a));
        // Roots of x^2 - tr x + det by the quadratic formula.
        const double tr = 4, det = 3, disc = std::sqrt(tr * tr - 4 * det);
        return all({ expect_close(eig.values[0], (tr + disc) / 2, 1e-12, "largest eigenvalue"),
                     expect_close(eig.values[1], (tr - disc) / 2, 1e-12, "smallest eigenvalue") });
    } });

    out.push_back({ "inv_sqrt_multiply_back", [] {
        gen::Source src(101);
        double worst = 0;
        for (int rep = 0; rep < 20; ++rep) {
            const auto a = src.spd(5);
            const auto b = inv_sqrt(a);
            worst = std::max(worst, rel_frobenius(b.matrix() * a.matrix() * b.matrix(), Matrix::Identity(5, 5)));
        }
        return expect_close(worst, 0, 1e-9, "worst relative error of B A B - I");
    } });

    out.push_back({ "pseudo_inverse_penrose", [] {
        // Sample covariance of n = 3 replicates in k = 8 dimensions has rank 2.
        gen::Source src(202);
        std::vector<Vector> reps;
        for (int i = 0; i < 3; ++i) {
            reps.push_back(src.vector(8));
        }
        const auto s = summarize_one_sample(reps).s;
        const Matrix a = s.matrix(), g = pseudo_inverse(s).matrix();
        const double scale = a.norm(), gscale = g.norm();
        return all({ expect_close(static_cast<double>(rank(s)), 2, 0, "rank"),
                     expect_close((a * g * a - a).norm() / scale, 0, 1e-9, "A G A = A"),
                     expect_close((g * a * g - g).norm() / gscale, 0, 1e-9, "G A G = G"),
                     expect_close(((a * g).transpose() - a * g).norm(), 0, 1e-9, "A G symmetric"),
                     expect_close(((g * a).transpose() - g * a).norm(), 0, 1e-9, "G A symmetric") });
    } });

    out.push_back({ "helmert_orthonormal", [] {
        double worst = 0;
        for (Eigen::Index k = 2; k <= 20; ++k) {
            const Matrix t = helmert(k).rows;
            worst = std::max(worst, (t * t.transpose() - Matrix::Identity(k, k)).cwiseAbs().maxCoeff());
        }
        return expect_close(worst, 0, 1e-12, "worst |T T' - I|");
    } });

    out.push_back({ "diff_contrast_determinant", [] {
        Outcome o;
        for (Eigen::Index k = 2; k <= 10; ++k) {
            const Matrix t = diff_contrast(k).rows;
            std::vector<std::vector<long long> > m(k, std::vector<long long>(k));
            for (Eigen::Index i = 0; i < k; ++i) {
                for (Eigen::Index j = 0; j < k; ++j) {
                    m[i][j] = static_cast<long long>(std::llround(t(i, j)));
                }
            }
            const auto det = bareiss_determinant(m);
            // The library agrees with the exact integer determinant up to rounding.
            const double lib = t.determinant();
            if (det == 0 || std::abs(lib - det) > 1e-9 * std::abs(static_cast<double>(det))) {
                o.ok = false;
                o.detail = "k = " + std::to_string(k) + ": exact determinant " + std::to_string(det);
            }
        }
        if (o.ok) {
            o.detail = "nonzero exact determinant for k = 2..10";
        }
        return o;
    } });

    // Special functions.
    out.push_back({ "f_cdf_quadrature", [] { return expect_close(f_cdf(2.5, 8, 8), frozen::F_CDF_2_5_8_8, 1e-10, "f_cdf(2.5, 8, 8)"); } });
    out.push_back({ "digamma_series", [] {
        const auto dt = digamma_trigamma(10.5);
        return all({ expect_close(dt.first, frozen::DIGAMMA_10_5, 1e-10, "digamma(10.5)"),
                     expect_close(dt.second, frozen::TRIGAMMA_10_5, 1e-10, "trigamma(10.5)") });
    } });

    // Summaries.
    out.push_back({ "one_sample_hand_expansion", [] {
        std::vector<Vector> reps{ Vector::Zero(2), Vector::Zero(2) };
        reps[0] << 0, 2;
        reps[1] << 2, 0;
        const auto s = summarize_one_sample(reps);
        return all({ expect_close(s.xbar[0], 1, 1e-15, "xbar[0]"), expect_close(s.xbar[1], 1, 1e-15, "xbar[1]"),
                     expect_close(s.s(0, 0), 2, 1e-15, "s00"), expect_close(s.s(0, 1), -2, 1e-15, "s01"),
                     expect_close(s.s(1, 1), 2, 1e-15, "s11") });
    } });

    out.push_back({ "unpaired_pooling_hand_arithmetic", [] {
        auto scalar = [](double x) { return Vector::Constant(1, x); };
        std::vector<Vector> z{ scalar(1), scalar(3) }, y{ scalar(0), scalar(0), scalar(3) };
        const auto s = summarize_unpaired(z, y);
        return all({ expect_close(s.xbar[0], 1, 1e-15, "Zbar - Ybar"), expect_close(s.s(0, 0), 8.0 / 3, 1e-15, "pooled variance"),
                     expect_close(s.effective_n, 6.0 / 5, 1e-15, "mn/(m+n)") });
    } });

    out.push_back({ "helmert_constancy_explicit", [] {
        std::vector<Vector> reps{ Vector::Zero(3), Vector::Zero(3) };
        reps[0] << 1, 2, 3;
        reps[1] << 3, 2, 1;
        const auto s = summarize_constancy(reps, helmert(3));
        // Helmert rows 2..3 may differ from the oracle's in sign; the products are sign-invariant up to the off-diagonal.
        return all({ expect_close(s.xbar.norm(), 0, 1e-14, "|T1 xbar|"),
                     expect_close(s.s(0, 0), frozen::HELMERT3_S1_00, 1e-12, "S1[0,0]"),
                     expect_close(std::abs(s.s(0, 1)), std::abs(frozen::HELMERT3_S1_01), 1e-12, "|S1[0,1]|"),
                     expect_close(s.s(1, 1), frozen::HELMERT3_S1_11, 1e-12, "S1[1,1]") });
    } });

    // Empirical Bayes.
    out.push_back({ "nu_simulate_and_recover", [] {
        Rng rng(303);
        const double nu = 13, lambda_sq = 0.02, d = 2;
        std::vector<double> v(20000);
        for (auto& x : v) {
            const double sigma_sq = rng.inv_gamma(nu / 2, nu * lambda_sq / 2);
            x = sigma_sq * rng.chi_squared(d) / d;
        }
        return expect_close(estimate_nu_per_timepoint(v, d), nu, 2, "nu-hat from 20000 prior draws");
    } });

    out.push_back({ "lambda_direct_arithmetic", [] {
        const auto l = estimate_lambda(SymMatrix::identity(2), 7, 2);
        return all({ expect_close(l(0, 0), 4.0 / 7, 1e-15, "Lambda[0,0]"), expect_close(l(0, 1), 0, 1e-15, "Lambda[0,1]"),
                     expect_close(l(1, 1), 4.0 / 7, 1e-15, "Lambda[1,1]") });
    } });

    // Statistics.
    out.push_back({ "moderate_covariance_direct_arithmetic", [] {
        const auto s = moderate_covariance(SymMatrix::identity(1).scaled(2), 2, 1, SymMatrix::identity(1).scaled(4));
        return expect_close(s(0, 0), 8.0 / 3, 1e-15, "S-tilde");
    } });

    out.push_back({ "moderated_t_direct_arithmetic", [] {
        Vector xbar(2);
        xbar << 1, 2;
        const auto t = moderated_t(xbar, SymMatrix::identity(2), 4);
        return all({ expect_close(t[0], 2, 1e-14, "t[0]"), expect_close(t[1], 4, 1e-14, "t[1]"), expect_close(t.squaredNorm(), 20, 1e-13, "T2") });
    } });

    out.push_back({ "mb_high_precision", [] {
        return expect_close(mb_one_sample(50, 3, 8, 13, 0.08, 0.02).mb, frozen::MB_N3_K8_NU13_T50, 1e-10, "MB(T2 = 50, n = 3, k = 8)");
    } });

    out.push_back({ "mb_univariate_b_statistic", [] {
        return expect_close(mb_one_sample(2.5, 4, 1, 3, 0.2, 0.05).mb, frozen::B_T2_5_N4_D0_3, 1e-10, "k = 1 MB vs B-statistic");
    } });

    out.push_back({ "mb_n1_direct_arithmetic", [] {
        Hyperparameters h;
        h.nu = 5;
        h.lambda = SymMatrix::identity(3);
        h.eta = 0.5;
        h.p = 0.1;
        Vector x = Vector::Zero(3);
        x[0] = 1;
        return expect_close(mb_n1(x, h).mb, frozen::MB_N1_K3_NU5, 1e-10, "MB at n = 1");
    } });

    out.push_back({ "mb_nu_inf_limit", [] {
        gen::Source src(404);
        double worst = 0;
        for (int rep = 0; rep < 50; ++rep) {
            const auto lambda = src.spd(4);
            GeneSummary g;
            g.n = 3;
            g.df = 2;
            g.effective_n = 3;
            // Means on the sampling scale Lambda / n, inflated up to threefold; the truncation error grows like T2^2 / nu.
            g.xbar = cholesky(lambda) * src.vector(4) * (src.uniform(1, 3) / std::sqrt(3.0));
            g.s = src.spd(4);
            const auto m = moderate(g, 1e6, lambda);
            const double big = mb_one_sample(m.t2, 3, 4, 1e6, 0.1, 0.02).mb;
            worst = std::max(worst, std::abs(big - mb_limit_nu_inf(g.xbar, 3, lambda, 0.1, 0.02).mb));
        }
        return expect_close(worst, 0, 1e-3, "worst |MB(1e6) - MB(inf)|");
    } });

    out.push_back({ "mb_nu_zero_g_inverse", [] {
        gen::Source src(505);
        std::vector<Vector> reps;
        for (int i = 0; i < 3; ++i) {
            reps.push_back(src.vector(8));
        }
        const auto s = summarize_one_sample(reps);
        const auto u = unmoderated_t2(s.xbar, s.s, 3);
        // Oracle: T2 = n xbar' S^+ xbar with S^+ checked by the Penrose conditions above.
        const Matrix g = pseudo_inverse(s.s).matrix();
        const double want = 3 * s.xbar.dot(g * s.xbar);
        const double mb = mb_limit_nu_zero(s.xbar, s.s, 3, 0.1, 0.02).mb;
        auto o = all({ expect_close(static_cast<double>(u.rank), 2, 0, "rank"), expect_close(u.t2, want, 1e-8 * std::max(1.0, want), "g-inverse T2") });
        o.ok = o.ok && std::isfinite(mb);
        return o;
    } });

    out.push_back({ "gls_shift_hand_arithmetic", [] {
        Vector xbar(2);
        xbar << 0, 5;
        Vector d(2);
        d << 1, 4;
        const auto mu = constancy_mle_shift(xbar, SymMatrix::diagonal(d));
        return all({ expect_close(mu[0], 1, 1e-14, "mu_H[0]"), expect_close(mu[1], 1, 1e-14, "mu_H[1]") });
    } });

    out.push_back({ "anova_sums_of_squares", [] {
        std::vector<Vector> reps(3, Vector::Zero(3));
        reps[0] << 1, 2, 4;
        reps[1] << 2, 2, 5;
        reps[2] << 0, 3, 6;
        return expect_close(anova_f(reps).f, frozen::ANOVA_F_3X3, 1e-10, "two-way ANOVA F");
    } });

    out.push_back({ "replicate_variance_direct_arithmetic", [] {
        Vector x(2);
        x << 0, 2;
        std::vector<Vector> reps{ x };
        return expect_close(replicate_variance(reps), 2, 1e-15, "replicate variance");
    } });

    // Simulation.
    out.push_back({ "inverse_wishart_mean", [] {
        // Dimension 3 keeps enough finite moments (nu - dim - 7 > 0) for a stable standard error.
        Matrix l(3, 3);
        l << 1.0, 0.3, -0.2, 0.3, 2.0, 0.5, -0.2, 0.5, 1.5;
        const SymMatrix lambda(l);
        const double nu = 13;
        const auto dim = lambda.dim();
        const int draws = 100000;
        Rng rng(606);
        Matrix sum = Matrix::Zero(dim, dim), sum_sq = Matrix::Zero(dim, dim);
        for (int i = 0; i < draws; ++i) {
            const Matrix s = sample_inv_wishart(nu, lambda, rng).matrix();
            sum += s;
            sum_sq += s.cwiseProduct(s);
        }
        const Matrix mean = sum / draws;
        const Matrix se = ((sum_sq / draws - mean.cwiseProduct(mean)) / draws).cwiseSqrt();
        const Matrix want = lambda.matrix() * (nu / (nu - dim - 1));
        double worst = 0;
        for (Eigen::Index i = 0; i < dim; ++i) {
            for (Eigen::Index j = 0; j <= i; ++j) {
                worst = std::max(worst, std::abs(mean(i, j) - want(i, j)) / se(i, j));
            }
        }
        return expect_close(worst, 0, 3, "worst |mean - nu Lambda/(nu - k - 1)| in standard errors");
    } });

    out.push_back({ "simulated_covariance_moment", [] {
        // Contrast channels of X - mu have covariance E[Sigma1] = nu Lambda1 / (nu - (k - 1) - 1).
        SimulationConfig config;
        config.n = 1;
        const auto t1 = helmert(config.k).contrasts();
        const auto dim = t1.rows();
        const int genes = 100000;
        Matrix sum = Matrix::Zero(dim, dim), sum_sq = Matrix::Zero(dim, dim);
        for (int g = 0; g < genes; ++g) {
            auto rng = Rng::substream(707, 0, g);
            const auto sim = simulate_gene(false, config, rng);
            const Vector e = t1 * (sim.replicates[0] - sim.mu);
            const Matrix outer = e * e.transpose();
            sum += outer;
            sum_sq += outer.cwiseProduct(outer);
        }
        const Matrix mean = sum / genes;
        const Matrix se = ((sum_sq / genes - mean.cwiseProduct(mean)) / genes).cwiseSqrt();
        const Matrix want = config.lambda1.matrix() * (config.nu / (config.nu - dim - 1));
        double worst = 0;
        for (Eigen::Index i = 0; i < dim; ++i) {
            worst = std::max(worst, std::abs(mean(i, i) - want(i, i)) / se(i, i));
        }
        return expect_close(worst, 0, 3, "worst diagonal deviation in standard errors");
    } });

    // Evaluation.
    out.push_back({ "mahalanobis_direct_arithmetic", [] {
        Vector mu(2);
        mu << 1, -1;
        return expect_close(mahalanobis_deviation(mu, SymMatrix::identity(2)), std::sqrt(2.0), 1e-15, "d");
    } });

    out.push_back({ "spearman_brute_force", [] {
        gen::Source src(808);
        double worst = 0;
        for (int rep = 0; rep < 20; ++rep) {
            std::vector<double> a(50), b(50);
            for (std::size_t i = 0; i < a.size(); ++i) {
                // Rounded values force ties.
                a[i] = std::round(src.normal() * 4) / 4;
                b[i] = a[i] + src.normal();
            }
            worst = std::max(worst, std::abs(spearman(a, b) - brute_force_spearman(a, b)));
        }
        return expect_close(worst, 0, 1e-12, "worst |spearman - brute force|");
    } });

    out.push_back({ "long_csv_round_trip", [] {
        SimulationConfig config;
        config.num_datasets = 1;
        config.genes = 20000;
        config.seed = 909;
        const auto data = simulate_dataset(config, 0);
        std::stringstream buffer;
        write_long_csv(buffer, data.dataset);
        const auto back = read_long_csv(buffer);
        double worst = 0;
        bool same_shape = back.skipped.empty() && back.dataset.genes.size() == data.dataset.genes.size() && back.dataset.time_labels == data.dataset.time_labels;
        for (std::size_t g = 0; same_shape && g < data.dataset.genes.size(); ++g) {
            const auto& a = data.dataset.genes[g].conditions[0];
            const auto& b = back.dataset.genes[g].conditions[0];
            same_shape = same_shape && a.size() == b.size() && data.dataset.genes[g].id == back.dataset.genes[g].id;
            for (std::size_t r = 0; same_shape && r < a.size(); ++r) {
                worst = std::max(worst, (a[r].values - b[r].values).cwiseAbs().maxCoeff());
            }
        }
        auto o = expect_close(worst, 0, 1e-12, "worst round-trip error over 20000 genes");
        o.ok = o.ok && same_shape;
        return o;
    } });

    return out;
}

}

#endif
