#pragma once

#include <memory>
#include <string>
#include <vector>

#include "sdlab/layers.hpp"
#include "sdlab/rng.hpp"
#include "sdlab/tensor.hpp"

namespace sdlab {

enum class EncoderKind { ToyPyramid, ExternalBackboneHook };

struct ModelConfig {
    EncoderKind encoder_kind = EncoderKind::ToyPyramid;
    int base_channels = 16;
    int rfb_channels = 32;
    int input_h = 256;
    int input_w = 256;
    std::uint64_t seed = 1;

    // Channel counts the three-scale interface delivers to the decoder side.
    // The toy encoder produces {4b, 8b, 8b}; an external provider must match.
    int c8() const { return 4 * base_channels; }
    int c16() const { return 8 * base_channels; }
    int c32() const { return 8 * base_channels; }

    void validate() const;  // throws std::invalid_argument
};

EncoderKind encoder_kind_from_string(const std::string& s);
std::string encoder_kind_to_string(EncoderKind k);

// Feature maps at strides 8, 16 and 32 relative to the input.
struct FeaturePyramid {
    Tensor f8, f16, f32;
};

// Contract for plugging an external three-scale backbone. Returned features
// are treated as fixed inputs: no gradient is propagated into the provider.
class FeatureProvider {
public:
    virtual ~FeatureProvider() = default;
    virtual FeaturePyramid features(const Tensor& images) = 0;
};

// Five stride-2 stages; outputs of stages 3..5 form the pyramid.
struct PyramidEncoder {
    ConvSiLU s1, s2, s3, s4, s5;

    explicit PyramidEncoder(int base_channels);
    void init(Rng& rng);
    FeaturePyramid forward(const Tensor& images);
    // Consumes gradients for all three taps, returns nothing (image gradients
    // are not needed).
    void backward(const Tensor& g8, const Tensor& g16, const Tensor& g32);
    void collect(std::vector<ParamRef>& out);
    void zero_grad();
};

// Multi-branch receptive-field block: a pointwise branch plus three factorized
// branches ending in 3x3 convolutions of dilation 1, 3, 5; concatenated,
// fused by 1x1 and summed with a 1x1 shortcut of the input.
struct RfbBlock {
    ConvSiLU b0;
    ConvSiLU b1_reduce, b1_row, b1_col, b1_dil;
    ConvSiLU b2_reduce, b2_row, b2_col, b2_dil;
    ConvSiLU b3_reduce, b3_row, b3_col, b3_dil;
    Conv2d fuse;
    Conv2d shortcut;
    SiLU out_act;

    RfbBlock(const std::string& name, int in_ch, int out_ch);
    void init(Rng& rng);
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& gout);
    void collect(std::vector<ParamRef>& out);
    void zero_grad();
};

// Dense aggregation of the three refined maps down to a single stride-8 map:
// deeper maps are upsampled bilinearly, gate the shallower maps by elementwise
// multiplication, and the results are merged by concatenation + convolution.
struct AggregationDecoder {
    ConvSiLU gate16, gate8_deep, gate8_mid;
    ConvSiLU merge16, merge8;
    ConvSiLU fuse_out;

    explicit AggregationDecoder(const std::string& name, int ch);
    void init(Rng& rng);
    Tensor forward(const Tensor& r8, const Tensor& r16, const Tensor& r32);
    // Returns gradients w.r.t. (r8, r16, r32).
    void backward(const Tensor& gout, Tensor* g8, Tensor* g16, Tensor* g32);
    void collect(std::vector<ParamRef>& out);
    void zero_grad();

private:
    // stored intermediates for backward
    Tensor r8_, r16_, r32_;
    Tensor up32to16_, a16_, g16x_;
    Tensor up32to8_, a8d_, up16to8_, a8m_, p8_, g8x_;
    Tensor d16_, up_d16_;
};

// The segmentation network: pyramid encoder (toy or external hook), one
// receptive-field block per scale, dense aggregation, 1-channel head, and
// bilinear upsampling back to the input resolution.
class SegModel {
    ModelConfig config_;  // validated before any layer is built

public:
    explicit SegModel(const ModelConfig& config);

    const ModelConfig& config() const { return config_; }

    void set_feature_provider(std::shared_ptr<FeatureProvider> provider);

    FeaturePyramid encode(const Tensor& images);
    Tensor forward(const Tensor& images);          // -> logits (n,1,H,W)
    void backward(const Tensor& grad_logits);      // accumulates parameter grads

    std::vector<ParamRef> parameters();
    void zero_grad();

    std::int64_t step_count = 0;

    // Exposed for targeted tests.
    PyramidEncoder encoder;
    RfbBlock rfb8, rfb16, rfb32;
    AggregationDecoder decoder;

private:
    Conv2d head_;
    std::shared_ptr<FeatureProvider> provider_;

    // stored for backward
    int out_h8_ = 0, out_w8_ = 0;
};

}  // namespace sdlab
