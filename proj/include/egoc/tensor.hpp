// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cassert>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace egoc {

/// Dense row-major n-dimensional array. Covers the feature grids and
/// condition volumes produced by the pipeline; not a linear-algebra type.
template <typename T>
class TensorT {
public:
    TensorT() = default;

    explicit TensorT(std::vector<std::size_t> dims, T fill = T{}) : dims_(std::move(dims)) {
        if (dims_.empty()) throw std::invalid_argument("tensor: rank must be >= 1");
        compute_strides();
        data_.assign(numel(), fill);
    }

    const std::vector<std::size_t>& dims() const { return dims_; }
    std::size_t rank() const { return dims_.size(); }
    std::size_t dim(std::size_t i) const { return dims_.at(i); }

    std::size_t numel() const {
        return std::accumulate(dims_.begin(), dims_.end(), std::size_t{1},
                               [](std::size_t a, std::size_t b) { return a * b; });
    }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    T& operator[](std::size_t flat) { return data_[flat]; }
    const T& operator[](std::size_t flat) const { return data_[flat]; }

    template <typename... Ix>
    T& operator()(Ix... ix) {
        return data_[offset(ix...)];
    }
    template <typename... Ix>
    const T& operator()(Ix... ix) const {
        return data_[offset(ix...)];
    }

    bool same_shape(const TensorT& other) const { return dims_ == other.dims_; }

    friend bool operator==(const TensorT& a, const TensorT& b) {
        return a.dims_ == b.dims_ && a.data_ == b.data_;
    }

private:
    template <typename... Ix>
    std::size_t offset(Ix... ix) const {
        assert(sizeof...(ix) == dims_.size());
        std::size_t flat = 0, k = 0;
        ((flat += static_cast<std::size_t>(ix) * strides_[k++]), ...);
        return flat;
    }

    void compute_strides() {
        strides_.assign(dims_.size(), 1);
        for (std::size_t i = dims_.size(); i-- > 1;) strides_[i - 1] = strides_[i] * dims_[i];
    }

    std::vector<std::size_t> dims_;
    std::vector<std::size_t> strides_;
    std::vector<T> data_;
};

using Tensor = TensorT<double>;
using TensorF = TensorT<float>;

}  // namespace egoc
