#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mpr/error.hpp"

namespace mpr {

// Dense row-major matrix of doubles. Rows are contiguous so every model
// embedding lookup is a span into one allocation.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }

    void fill(double v);

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Horizontal concatenation [a | b]; row counts must agree.
Matrix hconcat(const Matrix& a, const Matrix& b);

// a * b, straightforward triple loop over the simd dot kernel.
Matrix matmul(const Matrix& a, const Matrix& b);

// Row vector times matrix: out = x * b.
std::vector<double> row_times(std::span<const double> x, const Matrix& b);

double frobenius_squared(const Matrix& m);

// Min-max normalises every entry into [0,1]; a constant matrix maps to 0.
Matrix min_max_normalized(const Matrix& m);

}  // namespace mpr
