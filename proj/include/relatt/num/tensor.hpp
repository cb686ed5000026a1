#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "relatt/error.hpp"

namespace relatt {

// Dense row-major tensor of doubles. Rank 0 (scalar stored as numel-1),
// rank 1 and rank 2 cover everything the model needs.
class Tensor {
public:
    Tensor() = default;

    Tensor(std::vector<int> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        std::int64_t n = 1;
        for (int e : shape_) {
            if (e < 0) throw ContractError("tensor: negative extent");
            n *= e;
        }
        if (n != static_cast<std::int64_t>(data_.size()))
            throw ContractError("tensor: data length does not match shape");
    }

    static Tensor zeros(std::vector<int> shape) {
        std::int64_t n = 1;
        for (int e : shape) n *= e;
        return Tensor(std::move(shape), std::vector<double>(static_cast<std::size_t>(n), 0.0));
    }

    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    static Tensor vector(std::vector<double> v) {
        int n = static_cast<int>(v.size());
        return Tensor({n}, std::move(v));
    }

    static Tensor matrix(int rows, int cols, std::vector<double> v) {
        return Tensor({rows, cols}, std::move(v));
    }

    int ndim() const { return static_cast<int>(shape_.size()); }
    const std::vector<int>& shape() const { return shape_; }
    std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }
    bool empty() const { return data_.empty() && shape_.empty(); }

    int rows() const {
        if (ndim() != 2) throw ContractError("tensor: rows() on non-matrix");
        return shape_[0];
    }
    int cols() const {
        if (ndim() != 2) throw ContractError("tensor: cols() on non-matrix");
        return shape_[1];
    }
    int length() const {
        if (ndim() != 1) throw ContractError("tensor: length() on non-vector");
        return shape_[0];
    }

    double& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    double operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    double& at(int i, int j) { return data_[static_cast<std::size_t>(i) * shape_[1] + j]; }
    double at(int i, int j) const { return data_[static_cast<std::size_t>(i) * shape_[1] + j]; }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    std::span<double> row(int i) {
        return std::span<double>(data_).subspan(static_cast<std::size_t>(i) * shape_[1], shape_[1]);
    }
    std::span<const double> row(int i) const {
        return std::span<const double>(data_).subspan(static_cast<std::size_t>(i) * shape_[1],
                                                      shape_[1]);
    }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    std::string shape_str() const {
        std::string s = "[";
        for (std::size_t i = 0; i < shape_.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(shape_[i]);
        }
        return s + "]";
    }

private:
    std::vector<int> shape_;
    std::vector<double> data_;
};

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw ContractError("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (std::int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace relatt
