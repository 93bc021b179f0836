#include "sdlab/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace sdlab {

namespace {

inline int div_ceil(int a, int b) { return a > 0 ? (a + b - 1) / b : a / b; }
inline int div_floor(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace

Conv2d::Conv2d(std::string name_, int in_ch_, int out_ch_, int kh_, int kw_, int stride_,
               int pad_h_, int pad_w_, int dil_h_, int dil_w_)
    : in_ch(in_ch_),
      out_ch(out_ch_),
      kh(kh_),
      kw(kw_),
      stride(stride_),
      pad_h(pad_h_ < 0 ? dil_h_ * (kh_ - 1) / 2 : pad_h_),
      pad_w(pad_w_ < 0 ? dil_w_ * (kw_ - 1) / 2 : pad_w_),
      dil_h(dil_h_),
      dil_w(dil_w_),
      weight(out_ch_, in_ch_, kh_, kw_),
      wgrad(out_ch_, in_ch_, kh_, kw_),
      bias(out_ch_, 1, 1, 1),
      bgrad(out_ch_, 1, 1, 1),
      name(std::move(name_)) {
    if (in_ch < 1 || out_ch < 1) {
        throw std::invalid_argument("Conv2d " + name + ": channel counts must be >= 1");
    }
}

void Conv2d::init(Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_ch) * kh * kw);
    for (auto& v : weight.data) v = rng.uniform(-bound, bound);
    bias.fill(0.0);
}

Tensor Conv2d::forward(const Tensor& x) {
    if (x.c != in_ch) {
        throw std::invalid_argument("Conv2d " + name + ": expected " + std::to_string(in_ch) +
                                    " input channels, got " + std::to_string(x.c));
    }
    last_in = x;
    const int oh = out_h(x.h), ow = out_w(x.w);
    if (oh < 1 || ow < 1) {
        throw std::invalid_argument("Conv2d " + name + ": input " + shape_str(x) +
                                    " too small for kernel");
    }
    Tensor out(x.n, out_ch, oh, ow);
    const int ih = x.h, iw = x.w;
    for (int i = 0; i < x.n; ++i) {
        for (int oc = 0; oc < out_ch; ++oc) {
            double* op = &out.at(i, oc, 0, 0);
            const double b = bias.data[oc];
            for (int k = 0; k < oh * ow; ++k) op[k] = b;
            for (int ic = 0; ic < in_ch; ++ic) {
                const double* xp = &last_in.at(i, ic, 0, 0);
                const double* wp = &weight.at(oc, ic, 0, 0);
                for (int ky = 0; ky < kh; ++ky) {
                    const int off_y = ky * dil_h - pad_h;
                    const int oy_lo = std::max(0, div_ceil(-off_y, stride));
                    const int oy_hi = std::min(oh, div_floor(ih - 1 - off_y, stride) + 1);
                    for (int kx = 0; kx < kw; ++kx) {
                        const double w = wp[ky * kw + kx];
                        if (w == 0.0) continue;
                        const int off_x = kx * dil_w - pad_w;
                        const int ox_lo = std::max(0, div_ceil(-off_x, stride));
                        const int ox_hi = std::min(ow, div_floor(iw - 1 - off_x, stride) + 1);
                        for (int oy = oy_lo; oy < oy_hi; ++oy) {
                            const double* xrow = xp + (oy * stride + off_y) * iw + off_x;
                            double* orow = op + oy * ow;
                            for (int ox = ox_lo; ox < ox_hi; ++ox) {
                                orow[ox] += w * xrow[ox * stride];
                            }
                        }
                    }
                }
            }
        }
    }
    return out;
}

Tensor Conv2d::backward(const Tensor& gout) {
    const Tensor& x = last_in;
    if (gout.n != x.n || gout.c != out_ch || gout.h != out_h(x.h) || gout.w != out_w(x.w)) {
        throw std::invalid_argument("Conv2d " + name + ": bad gradient shape " +
                                    shape_str(gout));
    }
    Tensor gin = Tensor::zeros_like(x);
    const int ih = x.h, iw = x.w, oh = gout.h, ow = gout.w;
    for (int i = 0; i < x.n; ++i) {
        for (int oc = 0; oc < out_ch; ++oc) {
            const double* gp = &gout.at(i, oc, 0, 0);
            double bacc = 0.0;
            for (int k = 0; k < oh * ow; ++k) bacc += gp[k];
            bgrad.data[oc] += bacc;
            for (int ic = 0; ic < in_ch; ++ic) {
                const double* xp = &x.at(i, ic, 0, 0);
                double* gip = &gin.at(i, ic, 0, 0);
                const double* wp = &weight.at(oc, ic, 0, 0);
                double* wgp = &wgrad.at(oc, ic, 0, 0);
                for (int ky = 0; ky < kh; ++ky) {
                    const int off_y = ky * dil_h - pad_h;
                    const int oy_lo = std::max(0, div_ceil(-off_y, stride));
                    const int oy_hi = std::min(oh, div_floor(ih - 1 - off_y, stride) + 1);
                    for (int kx = 0; kx < kw; ++kx) {
                        const double w = wp[ky * kw + kx];
                        const int off_x = kx * dil_w - pad_w;
                        const int ox_lo = std::max(0, div_ceil(-off_x, stride));
                        const int ox_hi = std::min(ow, div_floor(iw - 1 - off_x, stride) + 1);
                        double wacc = 0.0;
                        for (int oy = oy_lo; oy < oy_hi; ++oy) {
                            const double* xrow = xp + (oy * stride + off_y) * iw + off_x;
                            double* girow = gip + (oy * stride + off_y) * iw + off_x;
                            const double* grow = gp + oy * ow;
                            for (int ox = ox_lo; ox < ox_hi; ++ox) {
                                const double g = grow[ox];
                                girow[ox * stride] += w * g;
                                wacc += xrow[ox * stride] * g;
                            }
                        }
                        wgp[ky * kw + kx] += wacc;
                    }
                }
            }
        }
    }
    return gin;
}

void Conv2d::collect(std::vector<ParamRef>& out) {
    out.push_back({name + ".weight", &weight, &wgrad});
    out.push_back({name + ".bias", &bias, &bgrad});
}

void Conv2d::zero_grad() {
    wgrad.fill(0.0);
    bgrad.fill(0.0);
}

Tensor SiLU::forward(const Tensor& x) {
    last_in = x;
    Tensor out = Tensor::zeros_like(x);
    for (size_t i = 0; i < x.data.size(); ++i) {
        out.data[i] = x.data[i] * sigmoid(x.data[i]);
    }
    return out;
}

Tensor SiLU::backward(const Tensor& gout) const {
    require_same_shape(gout, last_in, "SiLU::backward");
    Tensor gin = Tensor::zeros_like(gout);
    for (size_t i = 0; i < gout.data.size(); ++i) {
        double z = last_in.data[i];
        double s = sigmoid(z);
        gin.data[i] = gout.data[i] * s * (1.0 + z * (1.0 - s));
    }
    return gin;
}

// ---------------------------------------------------------------------------
// Bilinear resize
// ---------------------------------------------------------------------------

namespace {

struct Axis {
    std::vector<int> i0, i1;
    std::vector<double> f;  // weight on i1
};

Axis make_axis(int in_dim, int out_dim) {
    Axis ax;
    ax.i0.resize(out_dim);
    ax.i1.resize(out_dim);
    ax.f.resize(out_dim);
    const double scale = static_cast<double>(in_dim) / out_dim;
    for (int o = 0; o < out_dim; ++o) {
        double s = (o + 0.5) * scale - 0.5;
        if (s < 0.0) s = 0.0;
        if (s > in_dim - 1) s = in_dim - 1;
        int lo = static_cast<int>(s);
        if (lo > in_dim - 1) lo = in_dim - 1;
        ax.i0[o] = lo;
        ax.i1[o] = std::min(lo + 1, in_dim - 1);
        ax.f[o] = s - lo;
    }
    return ax;
}

}  // namespace

Tensor bilinear_resize(const Tensor& x, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) {
        throw std::invalid_argument("bilinear_resize: target dims must be >= 1");
    }
    Axis ay = make_axis(x.h, out_h);
    Axis axx = make_axis(x.w, out_w);
    Tensor out(x.n, x.c, out_h, out_w);
    for (int i = 0; i < x.n; ++i) {
        for (int ch = 0; ch < x.c; ++ch) {
            const double* xp = &x.at(i, ch, 0, 0);
            double* op = &out.at(i, ch, 0, 0);
            for (int oy = 0; oy < out_h; ++oy) {
                const double* r0 = xp + ay.i0[oy] * x.w;
                const double* r1 = xp + ay.i1[oy] * x.w;
                const double fy = ay.f[oy];
                double* orow = op + oy * out_w;
                for (int ox = 0; ox < out_w; ++ox) {
                    const double fx = axx.f[ox];
                    const double top = r0[axx.i0[ox]] * (1.0 - fx) + r0[axx.i1[ox]] * fx;
                    const double bot = r1[axx.i0[ox]] * (1.0 - fx) + r1[axx.i1[ox]] * fx;
                    orow[ox] = top * (1.0 - fy) + bot * fy;
                }
            }
        }
    }
    return out;
}

Tensor bilinear_resize_backward(const Tensor& gout, int in_h, int in_w) {
    Axis ay = make_axis(in_h, gout.h);
    Axis axx = make_axis(in_w, gout.w);
    Tensor gin(gout.n, gout.c, in_h, in_w);
    for (int i = 0; i < gout.n; ++i) {
        for (int ch = 0; ch < gout.c; ++ch) {
            const double* gp = &gout.at(i, ch, 0, 0);
            double* gip = &gin.at(i, ch, 0, 0);
            for (int oy = 0; oy < gout.h; ++oy) {
                const double fy = ay.f[oy];
                double* r0 = gip + ay.i0[oy] * in_w;
                double* r1 = gip + ay.i1[oy] * in_w;
                const double* grow = gp + oy * gout.w;
                for (int ox = 0; ox < gout.w; ++ox) {
                    const double fx = axx.f[ox];
                    const double g = grow[ox];
                    r0[axx.i0[ox]] += g * (1.0 - fy) * (1.0 - fx);
                    r0[axx.i1[ox]] += g * (1.0 - fy) * fx;
                    r1[axx.i0[ox]] += g * fy * (1.0 - fx);
                    r1[axx.i1[ox]] += g * fy * fx;
                }
            }
        }
    }
    return gin;
}

Tensor concat_channels(const std::vector<const Tensor*>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_channels: no inputs");
    int total_c = 0;
    for (const Tensor* p : parts) {
        if (p->n != parts[0]->n || p->h != parts[0]->h || p->w != parts[0]->w) {
            throw std::invalid_argument("concat_channels: mismatched dims");
        }
        total_c += p->c;
    }
    Tensor out(parts[0]->n, total_c, parts[0]->h, parts[0]->w);
    for (int i = 0; i < out.n; ++i) {
        int coff = 0;
        for (const Tensor* p : parts) {
            const size_t plane = static_cast<size_t>(p->c) * p->h * p->w;
            std::copy(p->sample_ptr(i), p->sample_ptr(i) + plane, &out.at(i, coff, 0, 0));
            coff += p->c;
        }
    }
    return out;
}

std::vector<Tensor> split_channels(const Tensor& g, const std::vector<int>& channel_counts) {
    int total = 0;
    for (int c : channel_counts) total += c;
    if (total != g.c) throw std::invalid_argument("split_channels: counts do not sum to c");
    std::vector<Tensor> out;
    out.reserve(channel_counts.size());
    int coff = 0;
    for (int c : channel_counts) {
        Tensor part(g.n, c, g.h, g.w);
        for (int i = 0; i < g.n; ++i) {
            const size_t plane = static_cast<size_t>(c) * g.h * g.w;
            std::copy(&g.at(i, coff, 0, 0), &g.at(i, coff, 0, 0) + plane, part.sample_ptr(i));
        }
        out.push_back(std::move(part));
        coff += c;
    }
    return out;
}

Tensor eltwise_mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "eltwise_mul");
    Tensor out = Tensor::zeros_like(a);
    for (size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] * b.data[i];
    return out;
}

Tensor eltwise_add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "eltwise_add");
    Tensor out = Tensor::zeros_like(a);
    for (size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] + b.data[i];
    return out;
}

void eltwise_add_inplace(Tensor& dst, const Tensor& src) {
    require_same_shape(dst, src, "eltwise_add_inplace");
    for (size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

}  // namespace sdlab
