#pragma once

#include <cstring>
#include <vector>

#include "san/common.hpp"

namespace san {

// Dense NCHW float tensor. Value semantics; contiguous row-major storage.
struct Shape {
    int n = 0, c = 0, h = 0, w = 0;

    int64_t numel() const { return int64_t(n) * c * h * w; }
    bool operator==(const Shape& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }
    bool operator!=(const Shape& o) const { return !(*this == o); }
    std::string str() const {
        return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
               std::to_string(h) + "," + std::to_string(w) + ")";
    }
};

class Tensor {
public:
    Tensor() = default;
    Tensor(int n, int c, int h, int w) : shape_{n, c, h, w}, v_(shape_.numel(), 0.0f) {}
    explicit Tensor(Shape s) : shape_(s), v_(s.numel(), 0.0f) {}

    static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape_); }

    const Shape& shape() const { return shape_; }
    int64_t numel() const { return shape_.numel(); }
    bool empty() const { return v_.empty(); }

    float* data() { return v_.data(); }
    const float* data() const { return v_.data(); }
    std::vector<float>& vec() { return v_; }
    const std::vector<float>& vec() const { return v_; }

    float& operator[](int64_t i) { return v_[i]; }
    float operator[](int64_t i) const { return v_[i]; }

    float& at(int n, int c, int y, int x) {
        return v_[((int64_t(n) * shape_.c + c) * shape_.h + y) * shape_.w + x];
    }
    float at(int n, int c, int y, int x) const {
        return v_[((int64_t(n) * shape_.c + c) * shape_.h + y) * shape_.w + x];
    }

    void fill(float x) { std::fill(v_.begin(), v_.end(), x); }
    void zero() { std::memset(v_.data(), 0, v_.size() * sizeof(float)); }

    bool same_bits(const Tensor& o) const {
        return shape_ == o.shape_ &&
               std::memcmp(v_.data(), o.v_.data(), v_.size() * sizeof(float)) == 0;
    }

private:
    Shape shape_{};
    std::vector<float> v_;
};

inline void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (a.shape() != b.shape())
        throw Error(std::string(what) + ": shape mismatch " + a.shape().str() +
                    " vs " + b.shape().str());
}

} // namespace san
