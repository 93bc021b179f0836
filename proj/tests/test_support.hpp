#pragma once

// Shared helpers for the test suites. The oracles here are written directly
// against the formulas and stay independent of the library implementation.

#include <cmath>
#include <functional>
#include <vector>

#include "sdlab/rng.hpp"
#include "sdlab/tensor.hpp"

namespace testsup {

// ---------------------------------------------------------------------------
// Scalar-math oracles
// ---------------------------------------------------------------------------

inline double oracle_sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Brute-force soft Dice over flat arrays.
inline double oracle_dice_loss(const std::vector<double>& p, const std::vector<double>& y,
                               double eps) {
    double inter = 0.0, ps = 0.0, ys = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
        inter += p[i] * y[i];
        ps += p[i];
        ys += y[i];
    }
    return 1.0 - (2.0 * inter + eps) / (ps + ys + eps);
}

inline double oracle_bce_pixel(double prob, double y) {
    return -(y * std::log(prob) + (1.0 - y) * std::log(1.0 - prob));
}

// ---------------------------------------------------------------------------
// Tensor construction
// ---------------------------------------------------------------------------

inline sdlab::Tensor tensor_from(int n, int c, int h, int w, const std::vector<double>& vals) {
    sdlab::Tensor t(n, c, h, w);
    t.data = vals;
    return t;
}

inline sdlab::Tensor random_tensor(int n, int c, int h, int w, sdlab::Rng& rng, double lo = -2.0,
                                   double hi = 2.0) {
    sdlab::Tensor t(n, c, h, w);
    for (auto& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

inline sdlab::Tensor random_binary_mask(int n, int c, int h, int w, sdlab::Rng& rng,
                                        double p_one = 0.5) {
    sdlab::Tensor t(n, c, h, w);
    for (auto& v : t.data) v = rng.uniform() < p_one ? 1.0 : 0.0;
    return t;
}

// ---------------------------------------------------------------------------
// Finite differences
// ---------------------------------------------------------------------------

// Central difference of a scalar-valued functional with respect to *x.
inline double central_diff(const std::function<double()>& eval, double* x, double h = 1e-6) {
    const double orig = *x;
    *x = orig + h;
    double fp = eval();
    *x = orig - h;
    double fm = eval();
    *x = orig;
    return (fp - fm) / (2.0 * h);
}

// |a - b| <= atol + rtol * max(|a|, |b|); the relative-error check with an
// absolute floor for near-zero gradients.
inline bool grad_close(double analytic, double numeric, double rtol = 1e-4,
                       double atol = 1e-7) {
    double diff = std::abs(analytic - numeric);
    double scale = std::max(std::abs(analytic), std::abs(numeric));
    return diff <= atol + rtol * scale;
}

// Checks every coordinate of `values` against central differences of `eval`.
// Returns the worst offending |a-f| excess over the tolerance (<= 0 when all pass).
inline bool check_grad_against_fd(const std::function<double()>& eval,
                                  std::vector<double>& values,
                                  const std::vector<double>& analytic, double h = 1e-6,
                                  double rtol = 1e-4, double atol = 1e-7) {
    for (size_t i = 0; i < values.size(); ++i) {
        double fd = central_diff(eval, &values[i], h);
        if (!grad_close(analytic[i], fd, rtol, atol)) return false;
    }
    return true;
}

}  // namespace testsup
