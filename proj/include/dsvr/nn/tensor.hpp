#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace dsvr::nn {

/// Dense 4-D tensor in (n, c, h, w) layout, w fastest. Single frames are
/// (1, C, H, W); frame stacks use the leading dimension.
template <typename T>
class Tensor4 {
public:
    Tensor4() = default;

    Tensor4(int n, int c, int h, int w)
        : shape_{n, c, h, w},
          data_(static_cast<std::size_t>(n) * c * h * w, T(0)) {
        validate_shape();
    }

    static Tensor4 filled(int n, int c, int h, int w, T v) {
        Tensor4 t(n, c, h, w);
        t.fill(v);
        return t;
    }

    static Tensor4 from(std::array<int, 4> shape, std::vector<T> data) {
        Tensor4 t;
        t.shape_ = shape;
        t.data_ = std::move(data);
        t.validate_shape();
        if (t.data_.size() != t.numel()) {
            throw std::invalid_argument("Tensor4::from: data size does not match shape");
        }
        return t;
    }

    const std::array<int, 4>& shape() const { return shape_; }
    int n() const { return shape_[0]; }
    int c() const { return shape_[1]; }
    int h() const { return shape_[2]; }
    int w() const { return shape_[3]; }

    std::size_t numel() const {
        return static_cast<std::size_t>(shape_[0]) * shape_[1] * shape_[2] * shape_[3];
    }
    bool empty() const { return data_.empty(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::vector<T>& vec() { return data_; }
    const std::vector<T>& vec() const { return data_; }

    T& at(int n, int c, int h, int w) { return data_[index(n, c, h, w)]; }
    const T& at(int n, int c, int h, int w) const { return data_[index(n, c, h, w)]; }

    std::size_t index(int n, int c, int h, int w) const {
        return ((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w;
    }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    bool same_shape(const Tensor4& o) const { return shape_ == o.shape_; }

    bool all_finite() const {
        for (T v : data_) {
            if (!std::isfinite(static_cast<double>(v))) return false;
        }
        return true;
    }

    template <typename U>
    Tensor4<U> cast() const {
        Tensor4<U> out(shape_[0], shape_[1], shape_[2], shape_[3]);
        for (std::size_t i = 0; i < data_.size(); ++i) {
            out.data()[i] = static_cast<U>(data_[i]);
        }
        return out;
    }

    std::string shape_str() const {
        return "(" + std::to_string(shape_[0]) + "," + std::to_string(shape_[1]) + "," +
               std::to_string(shape_[2]) + "," + std::to_string(shape_[3]) + ")";
    }

private:
    void validate_shape() const {
        for (int d : shape_) {
            if (d < 1) throw std::invalid_argument("Tensor4: all dimensions must be >= 1");
        }
    }

    std::array<int, 4> shape_{0, 0, 0, 0};
    std::vector<T> data_;
};

using Tensor4f = Tensor4<float>;
using Tensor4d = Tensor4<double>;

}  // namespace dsvr::nn
