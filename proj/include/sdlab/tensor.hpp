#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace sdlab {

// Dense 4-d array (batch, channels, height, width), row-major, double precision.
// Everything in the pipeline (images, feature maps, logits, masks) uses this one
// layout so shape checks stay uniform.
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_, double fill = 0.0)
        : n(n_), c(c_), h(h_), w(w_),
          data(static_cast<size_t>(n_) * c_ * h_ * w_, fill) {}

    static Tensor zeros_like(const Tensor& t) { return Tensor(t.n, t.c, t.h, t.w); }

    std::int64_t size() const { return static_cast<std::int64_t>(n) * c * h * w; }

    double& at(int i, int j, int y, int x) {
        return data[((static_cast<size_t>(i) * c + j) * h + y) * w + x];
    }
    double at(int i, int j, int y, int x) const {
        return data[((static_cast<size_t>(i) * c + j) * h + y) * w + x];
    }

    // Contiguous slice of one sample (c*h*w values).
    double* sample_ptr(int i) { return data.data() + static_cast<size_t>(i) * c * h * w; }
    const double* sample_ptr(int i) const {
        return data.data() + static_cast<size_t>(i) * c * h * w;
    }

    bool same_shape(const Tensor& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }
    std::array<int, 4> shape() const { return {n, c, h, w}; }

    void fill(double v) { std::fill(data.begin(), data.end(), v); }
    bool all_finite() const;
};

std::string shape_str(const Tensor& t);

// Throws std::invalid_argument naming `what` when shapes differ.
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

// Throws std::invalid_argument when any element is NaN/Inf.
void require_finite(const Tensor& t, const char* what);

}  // namespace sdlab
