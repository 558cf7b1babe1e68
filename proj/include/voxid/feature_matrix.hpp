#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace voxid {

// Row-major matrix of frame vectors: T rows, D values per row.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    FeatureMatrix(std::size_t rows, std::size_t dim)
        : rows_(rows), dim_(dim), data_(rows * dim, 0.0) {}

    std::size_t rows() const { return rows_; }
    std::size_t dim() const { return dim_; }
    bool empty() const { return rows_ == 0; }

    std::span<const double> row(std::size_t t) const {
        return {data_.data() + t * dim_, dim_};
    }
    std::span<double> row(std::size_t t) { return {data_.data() + t * dim_, dim_}; }

    double at(std::size_t t, std::size_t d) const { return data_[t * dim_ + d]; }
    double& at(std::size_t t, std::size_t d) { return data_[t * dim_ + d]; }

    void append_row(std::span<const double> v) {
        if (rows_ == 0 && dim_ == 0) dim_ = v.size();
        if (v.size() != dim_) throw std::invalid_argument("row dimension mismatch");
        data_.insert(data_.end(), v.begin(), v.end());
        ++rows_;
    }

    void append(const FeatureMatrix& other) {
        if (other.empty()) return;
        if (rows_ == 0 && dim_ == 0) dim_ = other.dim_;
        if (other.dim_ != dim_) throw std::invalid_argument("matrix dimension mismatch");
        data_.insert(data_.end(), other.data_.begin(), other.data_.end());
        rows_ += other.rows_;
    }

    // Copy of the first n rows (n clamped to the row count).
    FeatureMatrix take_rows(std::size_t n) const {
        if (n >= rows_) return *this;
        FeatureMatrix out;
        out.rows_ = n;
        out.dim_ = dim_;
        out.data_.assign(data_.begin(),
                         data_.begin() + static_cast<std::ptrdiff_t>(n * dim_));
        return out;
    }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    bool operator==(const FeatureMatrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t dim_ = 0;
    std::vector<double> data_;
};

}  // namespace voxid
