#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace bevlat {

// Dense channel-major [C][H][W] array of doubles.
class Tensor3 {
public:
    Tensor3() = default;
    Tensor3(int channels, int rows, int cols, double fill = 0.0)
        : c_(channels), h_(rows), w_(cols),
          data_(static_cast<std::size_t>(channels) * rows * cols, fill) {}

    int channels() const { return c_; }
    int rows() const { return h_; }
    int cols() const { return w_; }
    std::size_t plane() const { return static_cast<std::size_t>(h_) * w_; }
    std::size_t size() const { return data_.size(); }
    bool same_shape(const Tensor3& o) const { return c_ == o.c_ && h_ == o.h_ && w_ == o.w_; }

    double& at(int c, int i, int j) { return data_[(static_cast<std::size_t>(c) * h_ + i) * w_ + j]; }
    double at(int c, int i, int j) const { return data_[(static_cast<std::size_t>(c) * h_ + i) * w_ + j]; }
    double* channel(int c) { return data_.data() + c * plane(); }
    const double* channel(int c) const { return data_.data() + c * plane(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    // Removes the first n channels in place, keeping the allocation.
    void drop_leading_channels(int n) {
        n = std::clamp(n, 0, c_);
        data_.erase(data_.begin(), data_.begin() + static_cast<std::ptrdiff_t>(n * plane()));
        c_ -= n;
    }

private:
    int c_ = 0, h_ = 0, w_ = 0;
    std::vector<double> data_;
};

}  // namespace bevlat
