#include <gtest/gtest.h>

#include "tcrank/matlin.hpp"
#include "generators.hpp"

using namespace tcrank;

namespace {

Matrix diag2(double a, double b) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}

}

TEST(SymMatrix, SymmetrizesSmallAsymmetry) {
    Matrix m(2, 2);
    m << 1, 0.5, 0.5 + 1e-12, 1;
    SymMatrix s(m);
    EXPECT_EQ(s(0, 1), s(1, 0));
}

TEST(SymMatrix, RejectsLargeAsymmetry) {
    Matrix m(2, 2);
    m << 1, 0.5, 0.6, 1;
    EXPECT_THROW(SymMatrix{ m }, DomainError);
    EXPECT_THROW(SymMatrix{ Matrix(2, 3) }, DimensionMismatch);
}

TEST(Cholesky, TrivialCases) {
    EXPECT_TRUE(cholesky(SymMatrix::identity(3)).isApprox(Matrix::Identity(3, 3)));
    EXPECT_TRUE(cholesky(SymMatrix(diag2(4, 9))).isApprox(diag2(2, 3)));
}

TEST(Cholesky, RejectsIndefinite) {
    Matrix m(2, 2);
    m << 1, 2, 2, 1;
    EXPECT_THROW(cholesky(SymMatrix(m)), NotPositiveDefinite);
    EXPECT_THROW(cholesky(SymMatrix(diag2(1, 0))), NotPositiveDefinite);
}

TEST(SymEigen, TrivialCases) {
    auto id = sym_eigen(SymMatrix::identity(2));
    EXPECT_DOUBLE_EQ(id.values[0], 1);
    EXPECT_DOUBLE_EQ(id.values[1], 1);

    auto p = sym_eigen(constant_projection(4));
    EXPECT_NEAR(p.values[0], 1, 1e-12);
    for (int i = 1; i < 4; ++i) {
        EXPECT_NEAR(p.values[i], 0, 1e-12);
    }
}

TEST(SymEigen, ReconstructsRandomMatrices) {
    gen::Source src(1);
    for (int rep = 0; rep < 20; ++rep) {
        const auto dim = src.integer(1, 9);
        const auto a = src.spd(dim);
        const auto e = sym_eigen(a);
        const Matrix back = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
        EXPECT_LE((back - a.matrix()).norm() / a.matrix().norm(), 1e-10);
        EXPECT_LE((e.vectors.transpose() * e.vectors - Matrix::Identity(dim, dim)).norm(), 1e-10);
        for (Eigen::Index i = 1; i < dim; ++i) {
            EXPECT_GE(e.values[i - 1], e.values[i]);
        }
    }
}

TEST(InvSqrt, TrivialCases) {
    EXPECT_TRUE(inv_sqrt(SymMatrix::identity(3)).matrix().isApprox(Matrix::Identity(3, 3)));
    EXPECT_TRUE(inv_sqrt(SymMatrix(diag2(4, 9))).matrix().isApprox(diag2(0.5, 1.0 / 3)));
    EXPECT_THROW(inv_sqrt(SymMatrix(diag2(1, 0))), NotPositiveDefinite);
}

TEST(PseudoInverse, TrivialCases) {
    EXPECT_TRUE(pseudo_inverse(SymMatrix(diag2(2, 0))).matrix().isApprox(diag2(0.5, 0)));
    gen::Source src(2);
    const auto a = src.spd(4);
    EXPECT_LE((pseudo_inverse(a).matrix() - inverse(a).matrix()).norm() / inverse(a).matrix().norm(), 1e-10);
    EXPECT_EQ(rank(SymMatrix(diag2(2, 0))), 1);
}

TEST(Contrasts, HelmertStructure) {
    for (Eigen::Index k = 2; k <= 12; ++k) {
        const Matrix t = helmert(k).rows;
        for (Eigen::Index j = 1; j < k; ++j) {
            EXPECT_NEAR(t(0, j), t(0, 0), 1e-15);
        }
        for (Eigen::Index i = 1; i < k; ++i) {
            EXPECT_NEAR(t.row(i).sum(), 0, 1e-12);
        }
    }
}

TEST(Contrasts, DiffContrastStructure) {
    for (Eigen::Index k = 2; k <= 12; ++k) {
        const Matrix t = diff_contrast(k).rows;
        for (Eigen::Index i = 1; i < k; ++i) {
            EXPECT_NEAR(t.row(i).sum(), 0, 1e-12);
        }
        EXPECT_GT(std::abs(t.determinant()), 1e-8);
    }
}

TEST(Contrasts, RowSpacesAgree) {
    // Both families annihilate the constant vector, so their contrast rows span the same space.
    for (Eigen::Index k = 2; k <= 10; ++k) {
        const Matrix h = helmert(k).contrasts();
        const Matrix d = diff_contrast(k).contrasts();
        const Matrix proj = h.transpose() * h;
        EXPECT_LE((d * proj - d).norm(), 1e-10);
    }
}

TEST(Contrasts, InvalidDimension) {
    EXPECT_THROW(helmert(1), InvalidDimension);
    EXPECT_THROW(diff_contrast(1), InvalidDimension);
    EXPECT_THROW(constant_projection(0), InvalidDimension);
}

TEST(ConstantProjection, IsIdempotent) {
    const Matrix p = constant_projection(5).matrix();
    EXPECT_LE((p * p - p).norm(), 1e-12);
    EXPECT_NEAR(p.trace(), 1, 1e-12);
}
