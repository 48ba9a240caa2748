#pragma once

/// @file linalg.hpp
/// Small dense linear algebra used throughout: the species dimension n is
/// tiny (typically 2..8), so everything here is straightforward row-major
/// storage with O(n^3) factorizations.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace crossdiff {

using Vec = std::vector<double>;

class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {
        if (rows < 0 || cols < 0) throw std::invalid_argument("Matrix: negative extent");
    }

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double& operator()(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
    double operator()(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

inline Matrix operator+(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("Matrix+: shape mismatch");
    Matrix r(a.rows(), a.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) r(i, j) = a(i, j) + b(i, j);
    return r;
}

inline Matrix operator-(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("Matrix-: shape mismatch");
    Matrix r(a.rows(), a.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) r(i, j) = a(i, j) - b(i, j);
    return r;
}

inline Matrix operator*(double s, const Matrix& a) {
    Matrix r(a.rows(), a.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) r(i, j) = s * a(i, j);
    return r;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dim mismatch");
    Matrix r(a.rows(), b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            for (int j = 0; j < b.cols(); ++j) r(i, j) += aik * b(k, j);
        }
    return r;
}

inline Vec matvec(const Matrix& a, std::span<const double> x) {
    if (a.cols() != static_cast<int>(x.size()))
        throw std::invalid_argument("matvec: dim mismatch");
    Vec y(static_cast<size_t>(a.rows()), 0.0);
    for (int i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (int j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

/// z^T M y for an n x n matrix; used by quadratic-form checks.
inline double quad_form(std::span<const double> z, const Matrix& m, std::span<const double> y) {
    if (m.rows() != static_cast<int>(z.size()) || m.cols() != static_cast<int>(y.size()))
        throw std::invalid_argument("quad_form: dim mismatch");
    double s = 0.0;
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) s += z[i] * m(i, j) * y[j];
    return s;
}

inline double frobenius_norm(const Matrix& a) {
    double s = 0.0;
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
}

inline double max_abs(const Matrix& a) {
    double s = 0.0;
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) s = std::max(s, std::abs(a(i, j)));
    return s;
}

inline double norm2(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

inline double norm_inf(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s = std::max(s, std::abs(v));
    return s;
}

/// Rank-3 array with entries t(i,j,k); used for noise coefficient
/// derivatives d sigma_ij / d u_k.
class Tensor3 {
public:
    Tensor3() = default;
    Tensor3(int d0, int d1, int d2)
        : d0_(d0), d1_(d1), d2_(d2),
          data_(static_cast<size_t>(d0) * d1 * d2, 0.0) {}

    int dim0() const { return d0_; }
    int dim1() const { return d1_; }
    int dim2() const { return d2_; }

    double& operator()(int i, int j, int k) {
        return data_[(static_cast<size_t>(i) * d1_ + j) * d2_ + k];
    }
    double operator()(int i, int j, int k) const {
        return data_[(static_cast<size_t>(i) * d1_ + j) * d2_ + k];
    }

private:
    int d0_ = 0, d1_ = 0, d2_ = 0;
    std::vector<double> data_;
};

/// In-place LU factorization with partial pivoting. Returns false when a
/// pivot is exactly zero (singular to working precision).
inline bool lu_factor(Matrix& a, std::vector<int>& piv) {
    const int n = a.rows();
    if (a.cols() != n) throw std::invalid_argument("lu_factor: square matrix required");
    piv.resize(n);
    for (int k = 0; k < n; ++k) {
        int p = k;
        double best = std::abs(a(k, k));
        for (int i = k + 1; i < n; ++i) {
            const double v = std::abs(a(i, k));
            if (v > best) { best = v; p = i; }
        }
        if (best == 0.0 || !std::isfinite(best)) return false;
        piv[k] = p;
        if (p != k)
            for (int j = 0; j < n; ++j) std::swap(a(k, j), a(p, j));
        const double inv = 1.0 / a(k, k);
        for (int i = k + 1; i < n; ++i) {
            const double l = a(i, k) * inv;
            a(i, k) = l;
            for (int j = k + 1; j < n; ++j) a(i, j) -= l * a(k, j);
        }
    }
    return true;
}

/// Solve with a factorization produced by lu_factor; b is overwritten.
inline void lu_solve(const Matrix& lu, const std::vector<int>& piv, std::span<double> b) {
    const int n = lu.rows();
    for (int k = 0; k < n; ++k) {
        if (piv[k] != k) std::swap(b[k], b[piv[k]]);
        for (int i = k + 1; i < n; ++i) b[i] -= lu(i, k) * b[k];
    }
    for (int k = n - 1; k >= 0; --k) {
        for (int j = k + 1; j < n; ++j) b[k] -= lu(k, j) * b[j];
        b[k] /= lu(k, k);
    }
}

}  // namespace crossdiff
