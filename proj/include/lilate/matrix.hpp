#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace lilate {

// Dense column-major matrix; columns are contiguous so the kernel layer can
// stream over observations.
class ColumnMatrix {
public:
    ColumnMatrix() = default;
    ColumnMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[j * rows_ + i]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[j * rows_ + i]; }

    std::span<const double> col(std::size_t j) const { return {data_.data() + j * rows_, rows_}; }
    std::span<double> col(std::size_t j) { return {data_.data() + j * rows_, rows_}; }

    std::vector<double> row(std::size_t i) const {
        std::vector<double> out(cols_);
        for (std::size_t j = 0; j < cols_; ++j) out[j] = (*this)(i, j);
        return out;
    }

    // Rows selected by index, in the given order.
    ColumnMatrix select_rows(std::span<const std::size_t> index) const {
        ColumnMatrix out(index.size(), cols_);
        for (std::size_t j = 0; j < cols_; ++j) {
            const double* src = data_.data() + j * rows_;
            double* dst = out.data_.data() + j * index.size();
            for (std::size_t i = 0; i < index.size(); ++i) dst[i] = src[index[i]];
        }
        return out;
    }

    // Appends a copy of column j as a new last column.
    void append_copy_of(std::size_t j) {
        assert(j < cols_);
        data_.insert(data_.end(), data_.begin() + static_cast<std::ptrdiff_t>(j * rows_),
                     data_.begin() + static_cast<std::ptrdiff_t>((j + 1) * rows_));
        ++cols_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

}  // namespace lilate
