#include "sdlab/model.hpp"

#include <stdexcept>

namespace sdlab {

void ModelConfig::validate() const {
    if (base_channels < 1) throw std::invalid_argument("model: base_channels must be >= 1");
    if (rfb_channels < 1) throw std::invalid_argument("model: rfb_channels must be >= 1");
    if (input_h < 32 || input_w < 32 || input_h % 32 != 0 || input_w % 32 != 0) {
        throw std::invalid_argument("model: input dims must be positive multiples of 32");
    }
}

EncoderKind encoder_kind_from_string(const std::string& s) {
    if (s == "toy-pyramid") return EncoderKind::ToyPyramid;
    if (s == "external-backbone-hook") return EncoderKind::ExternalBackboneHook;
    throw std::invalid_argument("unknown encoder_kind '" + s +
                                "' (valid: toy-pyramid, external-backbone-hook)");
}

std::string encoder_kind_to_string(EncoderKind k) {
    return k == EncoderKind::ToyPyramid ? "toy-pyramid" : "external-backbone-hook";
}

// ---------------------------------------------------------------------------
// PyramidEncoder
// ---------------------------------------------------------------------------

PyramidEncoder::PyramidEncoder(int b)
    : s1("encoder.s1", 3, b, 3, 3, 2),
      s2("encoder.s2", b, 2 * b, 3, 3, 2),
      s3("encoder.s3", 2 * b, 4 * b, 3, 3, 2),
      s4("encoder.s4", 4 * b, 8 * b, 3, 3, 2),
      s5("encoder.s5", 8 * b, 8 * b, 3, 3, 2) {}

void PyramidEncoder::init(Rng& rng) {
    s1.init(rng);
    s2.init(rng);
    s3.init(rng);
    s4.init(rng);
    s5.init(rng);
}

FeaturePyramid PyramidEncoder::forward(const Tensor& images) {
    FeaturePyramid pyr;
    Tensor x = s1.forward(images);
    x = s2.forward(x);
    pyr.f8 = s3.forward(x);
    pyr.f16 = s4.forward(pyr.f8);
    pyr.f32 = s5.forward(pyr.f16);
    return pyr;
}

void PyramidEncoder::backward(const Tensor& g8, const Tensor& g16, const Tensor& g32) {
    Tensor gi16 = s5.backward(g32);
    eltwise_add_inplace(gi16, g16);
    Tensor gi8 = s4.backward(gi16);
    eltwise_add_inplace(gi8, g8);
    Tensor gi4 = s3.backward(gi8);
    Tensor gi2 = s2.backward(gi4);
    s1.backward(gi2);  // image gradient discarded
}

void PyramidEncoder::collect(std::vector<ParamRef>& out) {
    s1.collect(out);
    s2.collect(out);
    s3.collect(out);
    s4.collect(out);
    s5.collect(out);
}

void PyramidEncoder::zero_grad() {
    s1.zero_grad();
    s2.zero_grad();
    s3.zero_grad();
    s4.zero_grad();
    s5.zero_grad();
}

// ---------------------------------------------------------------------------
// RfbBlock
// ---------------------------------------------------------------------------

RfbBlock::RfbBlock(const std::string& nm, int in_ch, int out_ch)
    : b0(nm + ".b0", in_ch, out_ch, 1, 1),
      b1_reduce(nm + ".b1.reduce", in_ch, out_ch, 1, 1),
      b1_row(nm + ".b1.row", out_ch, out_ch, 1, 3),
      b1_col(nm + ".b1.col", out_ch, out_ch, 3, 1),
      b1_dil(nm + ".b1.dil", out_ch, out_ch, 3, 3, 1, -1, -1, 1, 1),
      b2_reduce(nm + ".b2.reduce", in_ch, out_ch, 1, 1),
      b2_row(nm + ".b2.row", out_ch, out_ch, 1, 5),
      b2_col(nm + ".b2.col", out_ch, out_ch, 5, 1),
      b2_dil(nm + ".b2.dil", out_ch, out_ch, 3, 3, 1, -1, -1, 3, 3),
      b3_reduce(nm + ".b3.reduce", in_ch, out_ch, 1, 1),
      b3_row(nm + ".b3.row", out_ch, out_ch, 1, 7),
      b3_col(nm + ".b3.col", out_ch, out_ch, 7, 1),
      b3_dil(nm + ".b3.dil", out_ch, out_ch, 3, 3, 1, -1, -1, 5, 5),
      fuse(nm + ".fuse", 4 * out_ch, out_ch, 1, 1),
      shortcut(nm + ".shortcut", in_ch, out_ch, 1, 1) {}

void RfbBlock::init(Rng& rng) {
    b0.init(rng);
    b1_reduce.init(rng);
    b1_row.init(rng);
    b1_col.init(rng);
    b1_dil.init(rng);
    b2_reduce.init(rng);
    b2_row.init(rng);
    b2_col.init(rng);
    b2_dil.init(rng);
    b3_reduce.init(rng);
    b3_row.init(rng);
    b3_col.init(rng);
    b3_dil.init(rng);
    fuse.init(rng);
    shortcut.init(rng);
}

Tensor RfbBlock::forward(const Tensor& x) {
    Tensor t0 = b0.forward(x);
    Tensor t1 = b1_dil.forward(b1_col.forward(b1_row.forward(b1_reduce.forward(x))));
    Tensor t2 = b2_dil.forward(b2_col.forward(b2_row.forward(b2_reduce.forward(x))));
    Tensor t3 = b3_dil.forward(b3_col.forward(b3_row.forward(b3_reduce.forward(x))));
    Tensor cat = concat_channels({&t0, &t1, &t2, &t3});
    Tensor sum = eltwise_add(fuse.forward(cat), shortcut.forward(x));
    return out_act.forward(sum);
}

Tensor RfbBlock::backward(const Tensor& gout) {
    Tensor gsum = out_act.backward(gout);
    Tensor gin = shortcut.backward(gsum);
    Tensor gcat = fuse.backward(gsum);
    const int oc = fuse.in_ch / 4;
    std::vector<Tensor> parts = split_channels(gcat, {oc, oc, oc, oc});
    eltwise_add_inplace(gin, b0.backward(parts[0]));
    eltwise_add_inplace(
        gin, b1_reduce.backward(b1_row.backward(b1_col.backward(b1_dil.backward(parts[1])))));
    eltwise_add_inplace(
        gin, b2_reduce.backward(b2_row.backward(b2_col.backward(b2_dil.backward(parts[2])))));
    eltwise_add_inplace(
        gin, b3_reduce.backward(b3_row.backward(b3_col.backward(b3_dil.backward(parts[3])))));
    return gin;
}

void RfbBlock::collect(std::vector<ParamRef>& out) {
    b0.collect(out);
    b1_reduce.collect(out);
    b1_row.collect(out);
    b1_col.collect(out);
    b1_dil.collect(out);
    b2_reduce.collect(out);
    b2_row.collect(out);
    b2_col.collect(out);
    b2_dil.collect(out);
    b3_reduce.collect(out);
    b3_row.collect(out);
    b3_col.collect(out);
    b3_dil.collect(out);
    fuse.collect(out);
    shortcut.collect(out);
}

void RfbBlock::zero_grad() {
    b0.zero_grad();
    b1_reduce.zero_grad();
    b1_row.zero_grad();
    b1_col.zero_grad();
    b1_dil.zero_grad();
    b2_reduce.zero_grad();
    b2_row.zero_grad();
    b2_col.zero_grad();
    b2_dil.zero_grad();
    b3_reduce.zero_grad();
    b3_row.zero_grad();
    b3_col.zero_grad();
    b3_dil.zero_grad();
    fuse.zero_grad();
    shortcut.zero_grad();
}

// ---------------------------------------------------------------------------
// AggregationDecoder
// ---------------------------------------------------------------------------

AggregationDecoder::AggregationDecoder(const std::string& nm, int ch)
    : gate16(nm + ".gate16", ch, ch, 3, 3),
      gate8_deep(nm + ".gate8_deep", ch, ch, 3, 3),
      gate8_mid(nm + ".gate8_mid", ch, ch, 3, 3),
      merge16(nm + ".merge16", 2 * ch, ch, 3, 3),
      merge8(nm + ".merge8", 2 * ch, ch, 3, 3),
      fuse_out(nm + ".fuse_out", ch, ch, 3, 3) {}

void AggregationDecoder::init(Rng& rng) {
    gate16.init(rng);
    gate8_deep.init(rng);
    gate8_mid.init(rng);
    merge16.init(rng);
    merge8.init(rng);
    fuse_out.init(rng);
}

Tensor AggregationDecoder::forward(const Tensor& r8, const Tensor& r16, const Tensor& r32) {
    r8_ = r8;
    r16_ = r16;
    r32_ = r32;

    up32to16_ = bilinear_resize(r32, r16.h, r16.w);
    a16_ = gate16.forward(up32to16_);
    g16x_ = eltwise_mul(r16, a16_);

    up32to8_ = bilinear_resize(r32, r8.h, r8.w);
    a8d_ = gate8_deep.forward(up32to8_);
    up16to8_ = bilinear_resize(r16, r8.h, r8.w);
    a8m_ = gate8_mid.forward(up16to8_);
    p8_ = eltwise_mul(r8, a8d_);
    g8x_ = eltwise_mul(p8_, a8m_);

    Tensor cat16 = concat_channels({&g16x_, &up32to16_});
    d16_ = merge16.forward(cat16);
    up_d16_ = bilinear_resize(d16_, r8.h, r8.w);
    Tensor cat8 = concat_channels({&g8x_, &up_d16_});
    Tensor d8 = merge8.forward(cat8);
    return fuse_out.forward(d8);
}

void AggregationDecoder::backward(const Tensor& gout, Tensor* g8, Tensor* g16, Tensor* g32) {
    const int ch = r8_.c;
    Tensor gd8 = fuse_out.backward(gout);
    Tensor gcat8 = merge8.backward(gd8);
    std::vector<Tensor> s8 = split_channels(gcat8, {ch, ch});
    Tensor& g_g8x = s8[0];
    Tensor g_d16 = bilinear_resize_backward(s8[1], d16_.h, d16_.w);

    Tensor gcat16 = merge16.backward(g_d16);
    std::vector<Tensor> s16 = split_channels(gcat16, {ch, ch});
    Tensor& g_g16x = s16[0];
    Tensor g_up32to16 = std::move(s16[1]);

    // g16x = r16 * a16
    *g16 = eltwise_mul(g_g16x, a16_);
    Tensor g_a16 = eltwise_mul(g_g16x, r16_);
    eltwise_add_inplace(g_up32to16, gate16.backward(g_a16));
    *g32 = bilinear_resize_backward(g_up32to16, r32_.h, r32_.w);

    // g8x = (r8 * a8d) * a8m
    Tensor g_p8 = eltwise_mul(g_g8x, a8m_);
    Tensor g_a8m = eltwise_mul(g_g8x, p8_);
    *g8 = eltwise_mul(g_p8, a8d_);
    Tensor g_a8d = eltwise_mul(g_p8, r8_);

    Tensor g_up16to8 = gate8_mid.backward(g_a8m);
    eltwise_add_inplace(*g16, bilinear_resize_backward(g_up16to8, r16_.h, r16_.w));

    Tensor g_up32to8 = gate8_deep.backward(g_a8d);
    eltwise_add_inplace(*g32, bilinear_resize_backward(g_up32to8, r32_.h, r32_.w));
}

void AggregationDecoder::collect(std::vector<ParamRef>& out) {
    gate16.collect(out);
    gate8_deep.collect(out);
    gate8_mid.collect(out);
    merge16.collect(out);
    merge8.collect(out);
    fuse_out.collect(out);
}

void AggregationDecoder::zero_grad() {
    gate16.zero_grad();
    gate8_deep.zero_grad();
    gate8_mid.zero_grad();
    merge16.zero_grad();
    merge8.zero_grad();
    fuse_out.zero_grad();
}

// ---------------------------------------------------------------------------
// SegModel
// ---------------------------------------------------------------------------

namespace {
const ModelConfig& validated(const ModelConfig& c) {
    c.validate();
    return c;
}
}  // namespace

SegModel::SegModel(const ModelConfig& config)
    : config_(validated(config)),
      encoder(config.base_channels),
      rfb8("rfb8", config.c8(), config.rfb_channels),
      rfb16("rfb16", config.c16(), config.rfb_channels),
      rfb32("rfb32", config.c32(), config.rfb_channels),
      decoder("decoder", config.rfb_channels),
      head_("head", config.rfb_channels, 1, 1, 1) {
    Rng rng(config_.seed);
    encoder.init(rng);
    rfb8.init(rng);
    rfb16.init(rng);
    rfb32.init(rng);
    decoder.init(rng);
    head_.init(rng);
}

void SegModel::set_feature_provider(std::shared_ptr<FeatureProvider> provider) {
    provider_ = std::move(provider);
}

FeaturePyramid SegModel::encode(const Tensor& images) {
    if (images.h % 32 != 0 || images.w % 32 != 0 || images.h == 0 || images.w == 0) {
        throw std::invalid_argument("encode: spatial dims must be multiples of 32, got " +
                                    shape_str(images));
    }
    if (images.c != 3) {
        throw std::invalid_argument("encode: expected 3-channel input, got " +
                                    shape_str(images));
    }
    if (config_.encoder_kind == EncoderKind::ToyPyramid) {
        return encoder.forward(images);
    }
    if (!provider_) {
        throw std::invalid_argument("encode: external-backbone-hook requires a feature provider");
    }
    FeaturePyramid pyr = provider_->features(images);
    auto check = [&](const Tensor& f, int stride, int ch, const char* nm) {
        if (f.n != images.n || f.c != ch || f.h != images.h / stride ||
            f.w != images.w / stride) {
            throw std::invalid_argument(std::string("encode: provider ") + nm +
                                        " has shape " + shape_str(f) + ", expected " +
                                        std::to_string(images.n) + "x" + std::to_string(ch) +
                                        "x" + std::to_string(images.h / stride) + "x" +
                                        std::to_string(images.w / stride));
        }
    };
    check(pyr.f8, 8, config_.c8(), "f8");
    check(pyr.f16, 16, config_.c16(), "f16");
    check(pyr.f32, 32, config_.c32(), "f32");
    return pyr;
}

Tensor SegModel::forward(const Tensor& images) {
    FeaturePyramid pyr = encode(images);
    Tensor r8 = rfb8.forward(pyr.f8);
    Tensor r16 = rfb16.forward(pyr.f16);
    Tensor r32 = rfb32.forward(pyr.f32);
    Tensor fused = decoder.forward(r8, r16, r32);
    out_h8_ = fused.h;
    out_w8_ = fused.w;
    Tensor logit8 = head_.forward(fused);
    return bilinear_resize(logit8, images.h, images.w);
}

void SegModel::backward(const Tensor& grad_logits) {
    Tensor g_l8 = bilinear_resize_backward(grad_logits, out_h8_, out_w8_);
    Tensor g_fused = head_.backward(g_l8);
    Tensor g_r8, g_r16, g_r32;
    decoder.backward(g_fused, &g_r8, &g_r16, &g_r32);
    Tensor g_f8 = rfb8.backward(g_r8);
    Tensor g_f16 = rfb16.backward(g_r16);
    Tensor g_f32 = rfb32.backward(g_r32);
    if (config_.encoder_kind == EncoderKind::ToyPyramid) {
        encoder.backward(g_f8, g_f16, g_f32);
    }
    // external features are constants: gradient stops at the hook
}

std::vector<ParamRef> SegModel::parameters() {
    std::vector<ParamRef> out;
    if (config_.encoder_kind == EncoderKind::ToyPyramid) {
        encoder.collect(out);
    }
    rfb8.collect(out);
    rfb16.collect(out);
    rfb32.collect(out);
    decoder.collect(out);
    head_.collect(out);
    return out;
}

void SegModel::zero_grad() {
    encoder.zero_grad();
    rfb8.zero_grad();
    rfb16.zero_grad();
    rfb32.zero_grad();
    decoder.zero_grad();
    head_.zero_grad();
}

}  // namespace sdlab
