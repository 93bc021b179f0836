#pragma once

#include <string>
#include <vector>

#include "sdlab/rng.hpp"
#include "sdlab/tensor.hpp"

namespace sdlab {

// Named view of one trainable array and its gradient accumulator.
struct ParamRef {
    std::string name;
    Tensor* value;
    Tensor* grad;
};

// 2-d convolution with stride, asymmetric padding and dilation.
// forward() stores its input; backward() accumulates weight/bias gradients
// and returns the gradient with respect to the input.
struct Conv2d {
    int in_ch, out_ch, kh, kw;
    int stride;
    int pad_h, pad_w;
    int dil_h, dil_w;

    Tensor weight, wgrad;  // (out_ch, in_ch, kh, kw)
    Tensor bias, bgrad;    // (out_ch, 1, 1, 1)
    std::string name;

    Tensor last_in;

    Conv2d(std::string name_, int in_ch_, int out_ch_, int kh_, int kw_, int stride_ = 1,
           int pad_h_ = -1, int pad_w_ = -1, int dil_h_ = 1, int dil_w_ = 1);

    void init(Rng& rng);  // fan-in scaled uniform weights, zero biases

    int out_h(int h) const { return (h + 2 * pad_h - dil_h * (kh - 1) - 1) / stride + 1; }
    int out_w(int w) const { return (w + 2 * pad_w - dil_w * (kw - 1) - 1) / stride + 1; }

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& gout);

    void collect(std::vector<ParamRef>& out);
    void zero_grad();
};

// Smooth activation x * sigma(x); keeps every loss surface differentiable.
struct SiLU {
    Tensor last_in;
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& gout) const;
};

// Conv followed by SiLU.
struct ConvSiLU {
    Conv2d conv;
    SiLU act;

    ConvSiLU(std::string name, int in_ch, int out_ch, int kh, int kw, int stride = 1,
             int pad_h = -1, int pad_w = -1, int dil_h = 1, int dil_w = 1)
        : conv(std::move(name), in_ch, out_ch, kh, kw, stride, pad_h, pad_w, dil_h, dil_w) {}

    void init(Rng& rng) { conv.init(rng); }
    Tensor forward(const Tensor& x) { return act.forward(conv.forward(x)); }
    Tensor backward(const Tensor& gout) { return conv.backward(act.backward(gout)); }
    void collect(std::vector<ParamRef>& out) { conv.collect(out); }
    void zero_grad() { conv.zero_grad(); }
};

// Bilinear resize (half-pixel / align-corners-false convention).
Tensor bilinear_resize(const Tensor& x, int out_h, int out_w);
Tensor bilinear_resize_backward(const Tensor& gout, int in_h, int in_w);

Tensor concat_channels(const std::vector<const Tensor*>& parts);
std::vector<Tensor> split_channels(const Tensor& g, const std::vector<int>& channel_counts);

Tensor eltwise_mul(const Tensor& a, const Tensor& b);
Tensor eltwise_add(const Tensor& a, const Tensor& b);
void eltwise_add_inplace(Tensor& dst, const Tensor& src);

}  // namespace sdlab
