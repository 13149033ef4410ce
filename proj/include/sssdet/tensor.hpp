#ifndef SSSDET_TENSOR_HPP
#define SSSDET_TENSOR_HPP

#include <algorithm>
#include <cstdint>
#include <vector>

#include "sssdet/common.hpp"

namespace sssdet {

struct Shape4 {
    int n = 0; // batch
    int c = 0; // channels
    int h = 0;
    int w = 0;

    int64_t count() const
    {
        return static_cast<int64_t>(n) * c * h * w;
    }

    bool operator==(const Shape4& o) const = default;
};

// Dense 4-D float array, row-major with batch outermost and width innermost.
class Tensor {
public:
    Tensor() = default;

    Tensor(int n, int c, int h, int w) : shape_{n, c, h, w}
    {
        if (n < 1 || c < 1 || h < 1 || w < 1) {
            throw ConfigError(strcat_msg("tensor dimensions must be >= 1, got ",
                                         n, "x", c, "x", h, "x", w));
        }
        data_.assign(static_cast<size_t>(shape_.count()), 0.0f);
    }

    explicit Tensor(const Shape4& s) : Tensor(s.n, s.c, s.h, s.w) {}

    const Shape4& shape() const { return shape_; }
    int64_t count() const { return shape_.count(); }
    bool empty() const { return data_.empty(); }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }

    int64_t index(int n, int c, int h, int w) const
    {
        return ((static_cast<int64_t>(n) * shape_.c + c) * shape_.h + h) * shape_.w + w;
    }

    float& at(int n, int c, int h, int w) { return data_[static_cast<size_t>(index(n, c, h, w))]; }
    float at(int n, int c, int h, int w) const { return data_[static_cast<size_t>(index(n, c, h, w))]; }

    // start of the (n, c) spatial plane
    float* plane(int n, int c) { return data() + index(n, c, 0, 0); }
    const float* plane(int n, int c) const { return data() + index(n, c, 0, 0); }

    void fill(float v) { std::fill(data_.begin(), data_.end(), v); }

    bool operator==(const Tensor& o) const = default;

private:
    Shape4 shape_;
    std::vector<float> data_;
};

inline Tensor random_tensor(int n, int c, int h, int w, Rng& rng, float lo = 0.0f, float hi = 1.0f)
{
    Tensor t(n, c, h, w);
    for (int64_t i = 0; i < t.count(); ++i) {
        t.data()[i] = rng.uniform(lo, hi);
    }
    return t;
}

} // namespace sssdet

#endif
