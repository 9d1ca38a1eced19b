#ifndef TCRANK_MATLIN_HPP
#define TCRANK_MATLIN_HPP

#include "errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

/**
 * @file matlin.hpp
 * @brief Small dense symmetric linear algebra on top of Eigen.
 *
 * Every covariance-like object in the library is a `SymMatrix`.
 * Dimensions are small (time points, typically at most 20) so everything is dense.
 */

namespace tcrank {

typedef Eigen::VectorXd Vector;
typedef Eigen::MatrixXd Matrix;

/**
 * @brief Dense real symmetric matrix.
 *
 * Construction symmetrizes its input by averaging with the transpose, provided the relative asymmetry is at most 1e-9.
 * Larger asymmetry is treated as a caller error.
 */
class SymMatrix {
public:
    SymMatrix() = default;

    explicit SymMatrix(Matrix m) : my_values(std::move(m)) {
        if (my_values.rows() != my_values.cols()) {
            throw DimensionMismatch("symmetric matrix must be square");
        }
        if (my_values.rows() < 1) {
            throw InvalidDimension("symmetric matrix must have dimension >= 1");
        }
        if (!my_values.allFinite()) {
            throw NonFiniteValue("symmetric matrix has non-finite entries");
        }
        const double scale = my_values.cwiseAbs().maxCoeff();
        const double asym = (my_values - my_values.transpose()).cwiseAbs().maxCoeff();
        if (asym > 1e-9 * scale) {
            throw DomainError("matrix is not symmetric (relative asymmetry " + std::to_string(asym / scale) + ")");
        }
        my_values = 0.5 * (my_values + my_values.transpose()).eval();
    }

    static SymMatrix identity(Eigen::Index dim) {
        return SymMatrix(Matrix::Identity(dim, dim));
    }

    static SymMatrix diagonal(const Vector& d) {
        return SymMatrix(Matrix(d.asDiagonal()));
    }

    static SymMatrix zero(Eigen::Index dim) {
        return SymMatrix(Matrix::Zero(dim, dim));
    }

    Eigen::Index dim() const { return my_values.rows(); }

    const Matrix& matrix() const { return my_values; }

    double operator()(Eigen::Index i, Eigen::Index j) const { return my_values(i, j); }

    bool empty() const { return my_values.size() == 0; }

    SymMatrix scaled(double factor) const {
        SymMatrix out;
        out.my_values = my_values * factor;
        return out;
    }

    /**
     * @return `A * this * A'`, for any conformable `A`.
     */
    SymMatrix congruence(const Matrix& a) const {
        return SymMatrix(a * my_values * a.transpose());
    }

private:
    Matrix my_values;
};

/**
 * Orthogonal-contrast families whose first row is constant and whose remaining rows sum to zero.
 */
enum class ContrastKind : unsigned char { HELMERT, FIRST_DIFFERENCE };

/**
 * @brief Nonsingular k-by-k transformation splitting a profile into a level and its non-constant part.
 */
struct ContrastMatrix {
    ContrastKind kind = ContrastKind::HELMERT;
    Matrix rows;

    Eigen::Index k() const { return rows.rows(); }

    /**
     * @return First row, as a column vector.
     */
    Vector level() const { return rows.row(0).transpose(); }

    /**
     * @return Remaining `k - 1` rows.
     */
    Matrix contrasts() const { return rows.bottomRows(rows.rows() - 1); }
};

/**
 * @brief Spectral decomposition of a symmetric matrix.
 */
struct SymEigen {
    /**
     * Eigenvalues in descending order.
     */
    Vector values;

    /**
     * Orthonormal eigenvectors, one per column, matching `values`.
     */
    Matrix vectors;
};

/**
 * Lower-triangular Cholesky factor.
 * A pivot at or below `dim * 1e-14 * max(diag(a))` is reported as `NotPositiveDefinite`.
 */
inline Matrix cholesky(const SymMatrix& a) {
    const auto n = a.dim();
    const Matrix& x = a.matrix();
    const double floor = n * 1e-14 * x.diagonal().maxCoeff();

    Matrix l = Matrix::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        double pivot = x(j, j) - l.row(j).head(j).squaredNorm();
        if (!(pivot > floor) || !(pivot > 0)) {
            throw NotPositiveDefinite("Cholesky pivot " + std::to_string(j) + " is " + std::to_string(pivot));
        }
        const double root = std::sqrt(pivot);
        l(j, j) = root;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            l(i, j) = (x(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / root;
        }
    }
    return l;
}

inline SymEigen sym_eigen(const SymMatrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(a.matrix());
    if (solver.info() != Eigen::Success) {
        throw NoConvergence("symmetric eigensolver failed");
    }
    // Eigen returns ascending order.
    SymEigen out;
    out.values = solver.eigenvalues().reverse();
    out.vectors = solver.eigenvectors().rowwise().reverse();
    return out;
}

namespace matlin_internal {

inline void check_pd(const SymEigen& eig, Eigen::Index dim) {
    const double top = eig.values(0);
    const double bottom = eig.values(dim - 1);
    if (!(top > 0) || !(bottom > dim * 1e-14 * top)) {
        throw NotPositiveDefinite("smallest eigenvalue " + std::to_string(bottom) + " relative to largest " + std::to_string(top));
    }
}

inline SymMatrix spectral_function(const SymEigen& eig, const Vector& transformed) {
    return SymMatrix(eig.vectors * transformed.asDiagonal() * eig.vectors.transpose());
}

}

/**
 * Symmetric inverse square root, so that `B * a * B` is the identity.
 */
inline SymMatrix inv_sqrt(const SymMatrix& a) {
    auto eig = sym_eigen(a);
    matlin_internal::check_pd(eig, a.dim());
    return matlin_internal::spectral_function(eig, eig.values.cwiseSqrt().cwiseInverse());
}

/**
 * Inverse of a positive definite matrix, computed spectrally.
 */
inline SymMatrix inverse(const SymMatrix& a) {
    auto eig = sym_eigen(a);
    matlin_internal::check_pd(eig, a.dim());
    return matlin_internal::spectral_function(eig, eig.values.cwiseInverse());
}

namespace matlin_internal {

inline Vector pseudo_transform(const Vector& values, double rel_tol, double power) {
    const double cutoff = rel_tol * std::max(values(0), 0.0);
    Vector out(values.size());
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        out(i) = (values(i) > cutoff && values(i) > 0) ? std::pow(values(i), power) : 0.0;
    }
    return out;
}

}

/**
 * Moore-Penrose inverse of a positive semi-definite matrix.
 * Eigenvalues at or below `rel_tol` times the largest eigenvalue are treated as zero.
 */
inline SymMatrix pseudo_inverse(const SymMatrix& a, double rel_tol = 1e-10) {
    auto eig = sym_eigen(a);
    return matlin_internal::spectral_function(eig, matlin_internal::pseudo_transform(eig.values, rel_tol, -1.0));
}

/**
 * Square root of `pseudo_inverse()`, with the same eigenvalue cutoff.
 */
inline SymMatrix pseudo_inv_sqrt(const SymMatrix& a, double rel_tol = 1e-10) {
    auto eig = sym_eigen(a);
    return matlin_internal::spectral_function(eig, matlin_internal::pseudo_transform(eig.values, rel_tol, -0.5));
}

/**
 * Numerical rank with the same cutoff as `pseudo_inverse()`.
 */
inline Eigen::Index rank(const SymMatrix& a, double rel_tol = 1e-10) {
    auto eig = sym_eigen(a);
    const double cutoff = rel_tol * std::max(eig.values(0), 0.0);
    return (eig.values.array() > cutoff).count();
}

/**
 * Projection onto constant vectors, `k^-1 1 1'`.
 */
inline SymMatrix constant_projection(Eigen::Index k) {
    if (k < 1) {
        throw InvalidDimension("projection needs k >= 1");
    }
    return SymMatrix(Matrix::Constant(k, k, 1.0 / static_cast<double>(k)));
}

/**
 * Helmert matrix: first row `1/sqrt(k)`; row `j` (1-based, j >= 2) has `1/sqrt(j(j-1))` in its first `j-1` columns,
 * `-(j-1)/sqrt(j(j-1))` in column `j` and zeros after that. It is orthonormal.
 */
inline ContrastMatrix helmert(Eigen::Index k) {
    if (k < 2) {
        throw InvalidDimension("Helmert matrix needs k >= 2");
    }
    ContrastMatrix out;
    out.kind = ContrastKind::HELMERT;
    out.rows = Matrix::Zero(k, k);
    out.rows.row(0).setConstant(1 / std::sqrt(static_cast<double>(k)));
    for (Eigen::Index j = 2; j <= k; ++j) {
        const double denom = std::sqrt(static_cast<double>(j * (j - 1)));
        for (Eigen::Index i = 1; i < j; ++i) {
            out.rows(j - 1, i - 1) = 1 / denom;
        }
        out.rows(j - 1, j - 1) = -static_cast<double>(j - 1) / denom;
    }
    return out;
}

/**
 * First-difference contrast: a row of ones, then row `j` has +1 at column `j-1` and -1 at column `j` (1-based).
 */
inline ContrastMatrix diff_contrast(Eigen::Index k) {
    if (k < 2) {
        throw InvalidDimension("difference contrast needs k >= 2");
    }
    ContrastMatrix out;
    out.kind = ContrastKind::FIRST_DIFFERENCE;
    out.rows = Matrix::Zero(k, k);
    out.rows.row(0).setOnes();
    for (Eigen::Index j = 2; j <= k; ++j) {
        out.rows(j - 1, j - 2) = 1;
        out.rows(j - 1, j - 1) = -1;
    }
    return out;
}

inline ContrastMatrix make_contrast(ContrastKind kind, Eigen::Index k) {
    return kind == ContrastKind::HELMERT ? helmert(k) : diff_contrast(k);
}

}

#endif
