// Exact rational linear algebra on GMP rationals. Small dense matrices only:
// Cartan matrices, their inverses and symmetric decompositions live here, so
// everything is a handful of ranks wide and exactness matters more than speed.

#pragma once

#include <gmpxx.h>

#include <Eigen/Dense>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace todalab {

using Rat = mpq_class;

inline Rat make_rat(long num, long den) {
    Rat q(num, den);
    q.canonicalize();
    return q;
}

inline std::string to_string(const Rat& q) {
    return q.get_str();  // "p" or "p/q", canonical form
}

class RatMat {
  public:
    RatMat() = default;
    RatMat(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, Rat(0)) {}

    static RatMat identity(int n) {
        RatMat m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1;
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    Rat& operator()(int i, int j) { return data_[static_cast<size_t>(i) * cols_ + j]; }
    const Rat& operator()(int i, int j) const { return data_[static_cast<size_t>(i) * cols_ + j]; }

    bool operator==(const RatMat& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

    RatMat operator*(const RatMat& o) const {
        if (cols_ != o.rows_) throw std::invalid_argument("RatMat: dimension mismatch in product");
        RatMat r(rows_, o.cols_);
        for (int i = 0; i < rows_; ++i)
            for (int k = 0; k < cols_; ++k) {
                const Rat& a = (*this)(i, k);
                if (a == 0) continue;
                for (int j = 0; j < o.cols_; ++j) r(i, j) += a * o(k, j);
            }
        return r;
    }

    RatMat operator-(const RatMat& o) const {
        if (rows_ != o.rows_ || cols_ != o.cols_) throw std::invalid_argument("RatMat: dimension mismatch");
        RatMat r(rows_, cols_);
        for (size_t k = 0; k < data_.size(); ++k) r.data_[k] = data_[k] - o.data_[k];
        return r;
    }

    RatMat transpose() const {
        RatMat r(cols_, rows_);
        for (int i = 0; i < rows_; ++i)
            for (int j = 0; j < cols_; ++j) r(j, i) = (*this)(i, j);
        return r;
    }

    bool is_symmetric() const {
        if (rows_ != cols_) return false;
        for (int i = 0; i < rows_; ++i)
            for (int j = i + 1; j < cols_; ++j)
                if ((*this)(i, j) != (*this)(j, i)) return false;
        return true;
    }

    bool is_zero() const {
        for (const auto& q : data_)
            if (q != 0) return false;
        return true;
    }

    /// Gauss-Jordan inverse in exact arithmetic. Throws if singular.
    RatMat inverse() const {
        if (rows_ != cols_) throw std::invalid_argument("RatMat: inverse of non-square matrix");
        const int n = rows_;
        RatMat a(*this), inv = identity(n);
        for (int col = 0; col < n; ++col) {
            int piv = -1;
            for (int r = col; r < n; ++r)
                if (a(r, col) != 0) { piv = r; break; }
            if (piv < 0) throw std::runtime_error("RatMat: singular matrix");
            if (piv != col) {
                for (int j = 0; j < n; ++j) {
                    std::swap(a(piv, j), a(col, j));
                    std::swap(inv(piv, j), inv(col, j));
                }
            }
            const Rat p = a(col, col);
            for (int j = 0; j < n; ++j) { a(col, j) /= p; inv(col, j) /= p; }
            for (int r = 0; r < n; ++r) {
                if (r == col || a(r, col) == 0) continue;
                const Rat f = a(r, col);
                for (int j = 0; j < n; ++j) {
                    a(r, j) -= f * a(col, j);
                    inv(r, j) -= f * inv(col, j);
                }
            }
        }
        return inv;
    }

    Rat determinant() const {
        if (rows_ != cols_) throw std::invalid_argument("RatMat: determinant of non-square matrix");
        RatMat a(*this);
        const int n = rows_;
        Rat det(1);
        for (int col = 0; col < n; ++col) {
            int piv = -1;
            for (int r = col; r < n; ++r)
                if (a(r, col) != 0) { piv = r; break; }
            if (piv < 0) return Rat(0);
            if (piv != col) {
                for (int j = col; j < n; ++j) std::swap(a(piv, j), a(col, j));
                det = -det;
            }
            det *= a(col, col);
            for (int r = col + 1; r < n; ++r) {
                if (a(r, col) == 0) continue;
                const Rat f = a(r, col) / a(col, col);
                for (int j = col; j < n; ++j) a(r, j) -= f * a(col, j);
            }
        }
        return det;
    }

    /// Determinants of the k x k top-left blocks, k = 1..n, from one elimination pass.
    std::vector<Rat> leading_principal_minors() const {
        if (rows_ != cols_) throw std::invalid_argument("RatMat: minors of non-square matrix");
        const int n = rows_;
        std::vector<Rat> minors;
        minors.reserve(n);
        for (int k = 1; k <= n; ++k) {
            RatMat sub(k, k);
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j) sub(i, j) = (*this)(i, j);
            minors.push_back(sub.determinant());
        }
        return minors;
    }

    Eigen::MatrixXd to_double() const {
        Eigen::MatrixXd m(rows_, cols_);
        for (int i = 0; i < rows_; ++i)
            for (int j = 0; j < cols_; ++j) m(i, j) = (*this)(i, j).get_d();
        return m;
    }

  private:
    int rows_ = 0, cols_ = 0;
    std::vector<Rat> data_;
};

}  // namespace todalab
