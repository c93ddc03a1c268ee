#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "crisisspot/errors.hpp"
#include "crisisspot/parallel.hpp"

namespace crisisspot {

/// Dense row-major 2-D tensor. Everything in the model (token embeddings,
/// node embeddings, weights, gradients) is one of these.
template <typename T>
class Matrix {
public:
    using value_type = T;

    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, T fill = T(0))
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<T> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_) {
            throw ShapeError("matrix data length " + std::to_string(data_.size()) +
                             " does not match " + std::to_string(rows_) + "x" +
                             std::to_string(cols_));
        }
    }
    Matrix(std::initializer_list<std::initializer_list<T>> init) {
        rows_ = init.size();
        cols_ = rows_ ? init.begin()->size() : 0;
        data_.reserve(rows_ * cols_);
        for (const auto& row : init) {
            if (row.size() != cols_) throw ShapeError("ragged matrix initializer");
            data_.insert(data_.end(), row.begin(), row.end());
        }
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
        return m;
    }
    static Matrix row_vector(std::vector<T> v) {
        const std::size_t n = v.size();
        return Matrix(1, n, std::move(v));
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<T>& data() noexcept { return data_; }
    const std::vector<T>& data() const noexcept { return data_; }

    bool same_shape(const Matrix& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    Matrix& operator+=(const Matrix& o) {
        require_same_shape(o, "+=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
    }

    template <typename U>
    Matrix<U> cast() const {
        Matrix<U> out(rows_, cols_);
        for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
        return out;
    }

    std::string shape_string() const {
        return std::to_string(rows_) + "x" + std::to_string(cols_);
    }

    void require_same_shape(const Matrix& o, const char* what) const {
        if (!same_shape(o)) {
            throw ShapeError(std::string(what) + ": shape " + shape_string() + " vs " +
                             o.shape_string());
        }
    }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

using Tensor2D = Matrix<float>;

/// C = A * B, plain (no gradient recording).
template <typename T>
Matrix<T> matmul(const Matrix<T>& a, const Matrix<T>& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: inner dimensions differ (" + a.shape_string() + " * " +
                         b.shape_string() + ")");
    }
    Matrix<T> c(a.rows(), b.cols());
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    parallel_rows(n, k * m, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            T* crow = &c(i, 0);
            for (std::size_t p = 0; p < k; ++p) {
                const T av = a(i, p);
                if (av == T(0)) continue;
                const T* brow = &b(p, 0);
                for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
            }
        }
    });
    return c;
}

/// C = A * B^T
template <typename T>
Matrix<T> matmul_bt(const Matrix<T>& a, const Matrix<T>& b) {
    if (a.cols() != b.cols()) {
        throw ShapeError("matmul_bt: inner dimensions differ (" + a.shape_string() + " * " +
                         b.shape_string() + "^T)");
    }
    Matrix<T> c(a.rows(), b.rows());
    parallel_rows(a.rows(), a.cols() * b.rows(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto ar = a.row(i);
            for (std::size_t j = 0; j < b.rows(); ++j) {
                const auto br = b.row(j);
                T s = T(0);
                for (std::size_t p = 0; p < ar.size(); ++p) s += ar[p] * br[p];
                c(i, j) = s;
            }
        }
    });
    return c;
}

/// C = A^T * B
template <typename T>
Matrix<T> matmul_at(const Matrix<T>& a, const Matrix<T>& b) {
    if (a.rows() != b.rows()) {
        throw ShapeError("matmul_at: inner dimensions differ (" + a.shape_string() + "^T * " +
                         b.shape_string() + ")");
    }
    Matrix<T> c(a.cols(), b.cols());
    // Rows of C are split across threads; each still accumulates over p in order.
    parallel_rows(a.cols(), a.rows() * b.cols(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = 0; p < a.rows(); ++p) {
            const auto ar = a.row(p);
            const auto br = b.row(p);
            for (std::size_t i = begin; i < end; ++i) {
                const T av = ar[i];
                if (av == T(0)) continue;
                T* crow = &c(i, 0);
                for (std::size_t j = 0; j < br.size(); ++j) crow[j] += av * br[j];
            }
        }
    });
    return c;
}

template <typename T>
Matrix<T> transpose(const Matrix<T>& a) {
    Matrix<T> t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

template <typename T>
T max_abs_diff(const Matrix<T>& a, const Matrix<T>& b) {
    a.require_same_shape(b, "max_abs_diff");
    T m = T(0);
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace crisisspot
