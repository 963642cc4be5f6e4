#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "bsg/error.hpp"

namespace bsg {

using WordId = std::uint32_t;

// Dense row-major matrix.
template <typename Real>
class Matrix {
public:
    using value_type = Real;

    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, Real fill = Real(0))
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    Real& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    Real operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<Real> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const Real> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<Real> flat() noexcept { return data_; }
    std::span<const Real> flat() const noexcept { return data_; }

    void fill(Real v) { std::fill(data_.begin(), data_.end(), v); }

    template <typename Other>
    Matrix<Other> cast() const {
        Matrix<Other> out(rows_, cols_);
        std::transform(data_.begin(), data_.end(), out.flat().begin(),
                       [](Real v) { return static_cast<Other>(v); });
        return out;
    }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Real> data_;
};

// Gradient accumulator over a subset of rows of a |V| x cols table.
// Rows are created on first touch and start at zero.
class SparseRows {
public:
    SparseRows() = default;
    explicit SparseRows(std::size_t cols) : cols_(cols) {}

    std::size_t cols() const noexcept { return cols_; }
    std::size_t touched() const noexcept { return ids_.size(); }
    bool empty() const noexcept { return ids_.empty(); }

    std::span<double> row(WordId id) {
        auto [it, inserted] = index_.try_emplace(id, ids_.size());
        if (inserted) {
            ids_.push_back(id);
            values_.resize(values_.size() + cols_, 0.0);
        }
        return {values_.data() + it->second * cols_, cols_};
    }

    bool contains(WordId id) const { return index_.count(id) != 0; }

    std::span<const double> find(WordId id) const {
        auto it = index_.find(id);
        if (it == index_.end()) return {};
        return {values_.data() + it->second * cols_, cols_};
    }

    // Touched ids in ascending order.
    std::vector<WordId> sorted_ids() const {
        std::vector<WordId> out = ids_;
        std::sort(out.begin(), out.end());
        return out;
    }

    void add(const SparseRows& other) {
        for (WordId id : other.sorted_ids()) {
            auto src = other.find(id);
            auto dst = row(id);
            for (std::size_t c = 0; c < cols_; ++c) dst[c] += src[c];
        }
    }

    void clear() {
        index_.clear();
        ids_.clear();
        values_.clear();
    }

private:
    std::size_t cols_ = 0;
    std::unordered_map<WordId, std::size_t> index_;
    std::vector<WordId> ids_;
    std::vector<double> values_;
};

template <typename Real>
void check_same_size(std::span<const Real> a, std::span<const Real> b, const char* what) {
    if (a.size() != b.size()) throw DataError(std::string("dimension mismatch in ") + what);
}

} // namespace bsg
