#ifndef LOOPLAT_MATRIX_HPP
#define LOOPLAT_MATRIX_HPP

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <vector>

#include "looplat/rational.hpp"

namespace looplat {

struct SingularMatrix : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dense matrix of exact rationals, row-major.
class QMatrix {
  public:
    QMatrix() = default;
    QMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), a_(rows * cols, Rat(0)) {}

    QMatrix(std::initializer_list<std::initializer_list<Rat>> init) {
        rows_ = init.size();
        cols_ = rows_ ? init.begin()->size() : 0;
        a_.reserve(rows_ * cols_);
        for (const auto& row : init) {
            if (row.size() != cols_) throw std::invalid_argument("ragged initializer");
            for (const auto& x : row) a_.push_back(x);
        }
    }

    static QMatrix identity(std::size_t n) {
        QMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    Rat& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
    const Rat& operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

    bool operator==(const QMatrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_ && a_ == o.a_; }
    bool operator!=(const QMatrix& o) const { return !(*this == o); }

    QMatrix transpose() const {
        QMatrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    QMatrix operator*(const QMatrix& b) const {
        if (cols_ != b.rows_) throw std::invalid_argument("matrix product shape mismatch");
        QMatrix c(rows_, b.cols_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t k = 0; k < cols_; ++k) {
                const Rat& x = (*this)(i, k);
                if (x == 0) continue;
                for (std::size_t j = 0; j < b.cols_; ++j) {
                    if (b(k, j) != 0) c(i, j) += x * b(k, j);
                }
            }
        return c;
    }

    QMatrix operator+(const QMatrix& b) const {
        if (rows_ != b.rows_ || cols_ != b.cols_) throw std::invalid_argument("matrix sum shape mismatch");
        QMatrix c = *this;
        for (std::size_t i = 0; i < a_.size(); ++i) c.a_[i] += b.a_[i];
        return c;
    }

    QMatrix operator-(const QMatrix& b) const {
        if (rows_ != b.rows_ || cols_ != b.cols_) throw std::invalid_argument("matrix diff shape mismatch");
        QMatrix c = *this;
        for (std::size_t i = 0; i < a_.size(); ++i) c.a_[i] -= b.a_[i];
        return c;
    }

    QMatrix operator*(const Rat& s) const {
        QMatrix c = *this;
        for (auto& x : c.a_) x *= s;
        return c;
    }

    std::vector<Rat> apply(const std::vector<Rat>& v) const {
        if (v.size() != cols_) throw std::invalid_argument("matrix apply shape mismatch");
        std::vector<Rat> r(rows_, Rat(0));
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j)
                if ((*this)(i, j) != 0 && v[j] != 0) r[i] += (*this)(i, j) * v[j];
        return r;
    }

    bool is_zero() const {
        return std::all_of(a_.begin(), a_.end(), [](const Rat& x) { return x == 0; });
    }

    bool is_symmetric() const {
        if (rows_ != cols_) return false;
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = i + 1; j < cols_; ++j)
                if ((*this)(i, j) != (*this)(j, i)) return false;
        return true;
    }

    bool is_integer() const {
        return std::all_of(a_.begin(), a_.end(), [](const Rat& x) { return x.get_den() == 1; });
    }

    QMatrix submatrix(const std::vector<std::size_t>& ri, const std::vector<std::size_t>& ci) const {
        QMatrix s(ri.size(), ci.size());
        for (std::size_t i = 0; i < ri.size(); ++i)
            for (std::size_t j = 0; j < ci.size(); ++j) s(i, j) = (*this)(ri[i], ci[j]);
        return s;
    }

    Rat det() const {
        if (rows_ != cols_) throw std::invalid_argument("det of non-square matrix");
        QMatrix m = *this;
        Rat d = 1;
        for (std::size_t c = 0; c < cols_; ++c) {
            std::size_t p = c;
            while (p < rows_ && m(p, c) == 0) ++p;
            if (p == rows_) return Rat(0);
            if (p != c) {
                for (std::size_t j = 0; j < cols_; ++j) std::swap(m(p, j), m(c, j));
                d = -d;
            }
            d *= m(c, c);
            Rat inv = Rat(1) / m(c, c);
            for (std::size_t i = c + 1; i < rows_; ++i) {
                if (m(i, c) == 0) continue;
                Rat f = m(i, c) * inv;
                for (std::size_t j = c; j < cols_; ++j) m(i, j) -= f * m(c, j);
            }
        }
        return d;
    }

    QMatrix inverse() const {
        if (rows_ != cols_) throw std::invalid_argument("inverse of non-square matrix");
        std::size_t n = rows_;
        QMatrix m = *this;
        QMatrix inv = identity(n);
        for (std::size_t c = 0; c < n; ++c) {
            std::size_t p = c;
            while (p < n && m(p, c) == 0) ++p;
            if (p == n) throw SingularMatrix("singular matrix");
            if (p != c)
                for (std::size_t j = 0; j < n; ++j) {
                    std::swap(m(p, j), m(c, j));
                    std::swap(inv(p, j), inv(c, j));
                }
            Rat piv = Rat(1) / m(c, c);
            for (std::size_t j = 0; j < n; ++j) {
                m(c, j) *= piv;
                inv(c, j) *= piv;
            }
            for (std::size_t i = 0; i < n; ++i) {
                if (i == c || m(i, c) == 0) continue;
                Rat f = m(i, c);
                for (std::size_t j = 0; j < n; ++j) {
                    m(i, j) -= f * m(c, j);
                    inv(i, j) -= f * inv(c, j);
                }
            }
        }
        return inv;
    }

    std::size_t rank() const {
        QMatrix m = *this;
        std::size_t r = 0;
        for (std::size_t c = 0; c < cols_ && r < rows_; ++c) {
            std::size_t p = r;
            while (p < rows_ && m(p, c) == 0) ++p;
            if (p == rows_) continue;
            if (p != r)
                for (std::size_t j = 0; j < cols_; ++j) std::swap(m(p, j), m(r, j));
            Rat inv = Rat(1) / m(r, c);
            for (std::size_t i = r + 1; i < rows_; ++i) {
                if (m(i, c) == 0) continue;
                Rat f = m(i, c) * inv;
                for (std::size_t j = c; j < cols_; ++j) m(i, j) -= f * m(r, j);
            }
            ++r;
        }
        return r;
    }

    // Solves A x = b; A must be square nonsingular.
    std::vector<Rat> solve(const std::vector<Rat>& b) const {
        if (rows_ != cols_ || b.size() != rows_) throw std::invalid_argument("solve shape mismatch");
        std::size_t n = rows_;
        QMatrix m = *this;
        std::vector<Rat> x = b;
        for (std::size_t c = 0; c < n; ++c) {
            std::size_t p = c;
            while (p < n && m(p, c) == 0) ++p;
            if (p == n) throw SingularMatrix("singular system");
            if (p != c) {
                for (std::size_t j = 0; j < n; ++j) std::swap(m(p, j), m(c, j));
                std::swap(x[p], x[c]);
            }
            Rat piv = Rat(1) / m(c, c);
            for (std::size_t i = c + 1; i < n; ++i) {
                if (m(i, c) == 0) continue;
                Rat f = m(i, c) * piv;
                for (std::size_t j = c; j < n; ++j) m(i, j) -= f * m(c, j);
                x[i] -= f * x[c];
            }
        }
        for (std::size_t i = n; i-- > 0;) {
            for (std::size_t j = i + 1; j < n; ++j) x[i] -= m(i, j) * x[j];
            x[i] /= m(i, i);
        }
        return x;
    }

    // All leading principal minors positive (exact positive-definiteness test
    // for symmetric input).
    bool is_positive_definite() const {
        if (rows_ != cols_) return false;
        QMatrix m = *this;
        for (std::size_t c = 0; c < cols_; ++c) {
            if (m(c, c) <= 0) return false;
            Rat inv = Rat(1) / m(c, c);
            for (std::size_t i = c + 1; i < rows_; ++i) {
                if (m(i, c) == 0) continue;
                Rat f = m(i, c) * inv;
                for (std::size_t j = c; j < cols_; ++j) m(i, j) -= f * m(c, j);
            }
        }
        return true;
    }

    // G = L D L^T with L unit lower triangular; requires symmetric positive
    // definite input.
    void ldlt(QMatrix& L, std::vector<Rat>& D) const {
        std::size_t n = rows_;
        L = identity(n);
        D.assign(n, Rat(0));
        QMatrix m = *this;
        for (std::size_t c = 0; c < n; ++c) {
            D[c] = m(c, c);
            if (D[c] <= 0) throw std::invalid_argument("ldlt: matrix not positive definite");
            Rat inv = Rat(1) / D[c];
            for (std::size_t i = c + 1; i < n; ++i) L(i, c) = m(i, c) * inv;
            for (std::size_t i = c + 1; i < n; ++i) {
                if (m(i, c) == 0) continue;
                for (std::size_t j = i; j < n; ++j) m(j, i) = m(i, j) = m(i, j) - L(i, c) * m(c, j);
            }
        }
    }

    std::vector<std::vector<double>> to_double() const {
        std::vector<std::vector<double>> d(rows_, std::vector<double>(cols_));
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) d[i][j] = looplat::to_double((*this)(i, j));
        return d;
    }

  private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<Rat> a_;
};

// Quotient Gram: kernel directions ki are minimized out of G (Schur
// complement of the retained block onto itself).
inline QMatrix schur_quotient(const QMatrix& G, const std::vector<std::size_t>& retained,
                              const std::vector<std::size_t>& kernel) {
    QMatrix A = G.submatrix(retained, retained);
    if (kernel.empty()) return A;
    QMatrix B = G.submatrix(retained, kernel);
    QMatrix C = G.submatrix(kernel, kernel);
    return A - B * C.inverse() * B.transpose();
}

// Column-style Hermite normal form of the integer span of the given column
// vectors. Returns a canonical basis (columns), pivots descending by row.
inline std::vector<std::vector<Int>> hnf_column_basis(std::vector<std::vector<Int>> cols, std::size_t dim) {
    for (auto& c : cols)
        if (c.size() != dim) throw std::invalid_argument("hnf: bad column size");
    std::vector<std::vector<Int>> basis;
    std::size_t pivot_row = 0;
    // Gaussian-style gcd elimination, top row down.
    std::vector<std::vector<Int>> work = std::move(cols);
    while (pivot_row < dim) {
        std::size_t k = 0;
        bool found = false;
        for (; k < work.size(); ++k)
            if (work[k][pivot_row] != 0) {
                found = true;
                break;
            }
        if (!found) {
            ++pivot_row;
            continue;
        }
        // Reduce all columns against each other at this row until one nonzero remains.
        while (true) {
            std::size_t best = work.size();
            for (std::size_t j = 0; j < work.size(); ++j) {
                if (work[j][pivot_row] == 0) continue;
                if (best == work.size() ||
                    mpz_cmpabs(work[j][pivot_row].get_mpz_t(), work[best][pivot_row].get_mpz_t()) < 0)
                    best = j;
            }
            bool multiple = false;
            for (std::size_t j = 0; j < work.size(); ++j) {
                if (j == best || work[j][pivot_row] == 0) continue;
                multiple = true;
                Int q = work[j][pivot_row] / work[best][pivot_row];
                // Round toward making the remainder small.
                for (std::size_t r = 0; r < dim; ++r) work[j][r] -= q * work[best][r];
            }
            if (!multiple) {
                if (work[best][pivot_row] < 0)
                    for (std::size_t r = 0; r < dim; ++r) work[best][r] = -work[best][r];
                basis.push_back(work[best]);
                work.erase(work.begin() + static_cast<std::ptrdiff_t>(best));
                break;
            }
        }
        ++pivot_row;
    }
    // Normalize: reduce entries above each pivot.
    for (std::size_t i = basis.size(); i-- > 0;) {
        std::size_t pr = 0;
        while (pr < dim && basis[i][pr] == 0) ++pr;
        for (std::size_t j = 0; j < i; ++j) {
            if (basis[j][pr] == 0) continue;
            Int q;
            mpz_fdiv_q(q.get_mpz_t(), basis[j][pr].get_mpz_t(), basis[i][pr].get_mpz_t());
            if (q != 0)
                for (std::size_t r = 0; r < dim; ++r) basis[j][r] -= q * basis[i][r];
        }
    }
    return basis;
}

}  // namespace looplat

#endif
