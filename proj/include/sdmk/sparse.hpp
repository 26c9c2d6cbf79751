#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace sdmk {

/// Symmetric matrix in compressed sparse row form. Both triangles are stored
/// and column indices are sorted within each row.
class SparseSymMatrix {
public:
    SparseSymMatrix() = default;

    SparseSymMatrix(std::size_t n, std::vector<std::size_t> row_ptr, std::vector<std::size_t> cols,
                    std::vector<double> values)
        : n_(n), row_ptr_(std::move(row_ptr)), cols_(std::move(cols)), values_(std::move(values)) {
        if (row_ptr_.size() != n_ + 1 || cols_.size() != values_.size() ||
            row_ptr_.back() != cols_.size())
            throw std::invalid_argument("inconsistent CSR arrays");
    }

    /// Dense symmetric input; exact zeros off the diagonal are dropped.
    static SparseSymMatrix from_dense(const std::vector<std::vector<double>>& dense) {
        const auto n = dense.size();
        std::vector<std::size_t> rp{0};
        std::vector<std::size_t> cols;
        std::vector<double> vals;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j || dense[i][j] != 0.0) {
                    cols.push_back(j);
                    vals.push_back(dense[i][j]);
                }
            }
            rp.push_back(cols.size());
        }
        return {n, std::move(rp), std::move(cols), std::move(vals)};
    }

    std::size_t size() const { return n_; }
    std::size_t nnz() const { return values_.size(); }

    std::span<const std::size_t> row_ptr() const { return row_ptr_; }
    std::span<const std::size_t> cols() const { return cols_; }
    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }

    /// Position of (i, j) in values(), or npos when outside the pattern.
    std::size_t find(std::size_t i, std::size_t j) const {
        const auto first = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
        const auto last = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
        const auto it = std::lower_bound(first, last, j);
        return (it != last && *it == j) ? static_cast<std::size_t>(it - cols_.begin()) : npos;
    }

    double operator()(std::size_t i, std::size_t j) const {
        const auto k = find(i, j);
        return k == npos ? 0.0 : values_[k];
    }

    void multiply(std::span<const double> x, std::span<double> y) const {
        assert(x.size() == n_ && y.size() == n_);
        for (std::size_t i = 0; i < n_; ++i) {
            double s = 0.0;
            for (auto k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += values_[k] * x[cols_[k]];
            y[i] = s;
        }
    }

    std::vector<double> operator*(std::span<const double> x) const {
        std::vector<double> y(n_);
        multiply(x, y);
        return y;
    }

    std::vector<std::vector<double>> to_dense() const {
        std::vector<std::vector<double>> d(n_, std::vector<double>(n_, 0.0));
        for (std::size_t i = 0; i < n_; ++i)
            for (auto k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) d[i][cols_[k]] = values_[k];
        return d;
    }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    std::size_t n_ = 0;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<std::size_t> cols_;
    std::vector<double> values_;
};

}  // namespace sdmk
