#pragma once

// Dense NCHW tensor with a flat row-major buffer. Deliberately minimal:
// no views, no broadcasting, no reference counting. Ops that every other
// header builds on (channel concat/slice, add, scale, global average pool)
// live here as free functions. All of them are pure and keep a fixed
// per-element summation order, so repeated runs are bitwise identical.

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace asymmkit {

struct Shape {
    int n = 0;
    int c = 0;
    int h = 0;
    int w = 0;

    std::int64_t count() const {
        return static_cast<std::int64_t>(n) * c * h * w;
    }
    bool operator==(const Shape& o) const = default;

    std::string str() const {
        return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
               std::to_string(h) + "," + std::to_string(w) + ")";
    }
};

template <typename T>
class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(Shape s) : shape_(s) {
        if (s.n < 0 || s.c < 0 || s.h < 0 || s.w < 0)
            throw std::invalid_argument("tensor: negative dimension " + s.str());
        data_.assign(static_cast<std::size_t>(s.count()), T(0));
    }
    Tensor(Shape s, std::vector<T> values) : shape_(s), data_(std::move(values)) {
        if (static_cast<std::int64_t>(data_.size()) != s.count())
            throw std::invalid_argument("tensor: buffer length does not match " + s.str());
    }

    const Shape& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::vector<T>& vec() { return data_; }
    const std::vector<T>& vec() const { return data_; }

    // Linear offset of (n, c, h, w) in the flat buffer.
    std::size_t offset(int n, int c, int h, int w) const {
        return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + h) * shape_.w + w;
    }
    T& at(int n, int c, int h, int w) { return data_[offset(n, c, h, w)]; }
    const T& at(int n, int c, int h, int w) const { return data_[offset(n, c, h, w)]; }

    void fill(T v) { data_.assign(data_.size(), v); }

    bool same_values(const Tensor& o) const {
        return shape_ == o.shape_ && data_ == o.data_;
    }

  private:
    Shape shape_;
    std::vector<T> data_;
};

// Concatenate along the channel axis; part i occupies the contiguous output
// channel range in list order. Zero-channel parts are legal and contribute
// nothing (they still must match on n/h/w unless empty of batch too).
template <typename T>
Tensor<T> concat_channels(const std::vector<const Tensor<T>*>& parts) {
    if (parts.empty())
        throw std::invalid_argument("concat_channels: empty part list");
    const Shape base = parts.front()->shape();
    int total_c = 0;
    for (const Tensor<T>* p : parts) {
        const Shape& s = p->shape();
        if (s.n != base.n || s.h != base.h || s.w != base.w)
            throw std::invalid_argument("concat_channels: mismatched shapes " + base.str() +
                                        " vs " + s.str());
        total_c += s.c;
    }
    Tensor<T> out(Shape{base.n, total_c, base.h, base.w});
    const std::size_t plane = static_cast<std::size_t>(base.h) * base.w;
    for (int n = 0; n < base.n; ++n) {
        std::size_t dst_c = 0;
        for (const Tensor<T>* p : parts) {
            const int pc = p->shape().c;
            if (pc == 0) continue;
            const T* src = p->data() + static_cast<std::size_t>(n) * pc * plane;
            T* dst = out.data() + (static_cast<std::size_t>(n) * total_c + dst_c) * plane;
            std::copy(src, src + static_cast<std::size_t>(pc) * plane, dst);
            dst_c += pc;
        }
    }
    return out;
}

// Channel slice [c0, c1); recovers concat parts bitwise.
template <typename T>
Tensor<T> slice_channels(const Tensor<T>& x, int c0, int c1) {
    const Shape s = x.shape();
    if (c0 < 0 || c1 < c0 || c1 > s.c)
        throw std::invalid_argument("slice_channels: bad range [" + std::to_string(c0) + "," +
                                    std::to_string(c1) + ") for " + s.str());
    Tensor<T> out(Shape{s.n, c1 - c0, s.h, s.w});
    const std::size_t plane = static_cast<std::size_t>(s.h) * s.w;
    for (int n = 0; n < s.n; ++n) {
        const T* src = x.data() + (static_cast<std::size_t>(n) * s.c + c0) * plane;
        T* dst = out.data() + static_cast<std::size_t>(n) * (c1 - c0) * plane;
        std::copy(src, src + static_cast<std::size_t>(c1 - c0) * plane, dst);
    }
    return out;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    if (!(a.shape() == b.shape()))
        throw std::invalid_argument("add: shape mismatch " + a.shape().str() + " vs " +
                                    b.shape().str());
    Tensor<T> out = a;
    const T* pb = b.data();
    T* po = out.data();
    for (std::size_t i = 0; i < out.size(); ++i) po[i] += pb[i];
    return out;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T s) {
    Tensor<T> out = a;
    for (T& v : out.vec()) v *= s;
    return out;
}

// Mean over (h, w) per (n, c); output has h = w = 1.
template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x) {
    const Shape s = x.shape();
    if (s.h < 1 || s.w < 1)
        throw std::invalid_argument("global_avg_pool: empty spatial extent " + s.str());
    Tensor<T> out(Shape{s.n, s.c, 1, 1});
    const std::size_t plane = static_cast<std::size_t>(s.h) * s.w;
    const T inv = T(1) / static_cast<T>(plane);
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c) {
            const T* p = x.data() + (static_cast<std::size_t>(n) * s.c + c) * plane;
            T acc = T(0);
            for (std::size_t i = 0; i < plane; ++i) acc += p[i];
            out.at(n, c, 0, 0) = acc * inv;
        }
    return out;
}

}  // namespace asymmkit
