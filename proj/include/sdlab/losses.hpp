#pragma once

#include <vector>

#include "sdlab/tensor.hpp"

namespace sdlab {

// Granularity of the confidence weighting inside the distillation term:
// one coefficient per sample, or a single coefficient for the whole batch.
enum class ConfidenceMode { PerSample, PerBatch };

struct LossBreakdown {
    double dice = 0.0;
    double bce = 0.0;
    double dcsd = 0.0;   // unscaled distillation term
    double total = 0.0;  // dice + bce + T^2 * dcsd
};

// Elementwise sigma(z / T). T must be > 0; T = 1 is the plain sigmoid.
Tensor sigmoid_with_temperature(const Tensor& logits, double temperature);

// d sigma(z/T) / dz = p * (1 - p) / T, with p = sigma(z/T).
Tensor sigmoid_with_temperature_grad(const Tensor& soft, double temperature);

// Soft Dice loss over all elements: 1 - (2*sum(p*y) + eps) / (sum(p) + sum(y) + eps).
double dice_loss(const Tensor& prob, const Tensor& mask, double eps);

// Same formula restricted to each sample's elements.
std::vector<double> dice_loss_per_sample(const Tensor& prob, const Tensor& mask, double eps);

// d dice_loss / d prob.
Tensor dice_loss_grad(const Tensor& prob, const Tensor& mask, double eps);

// Mean binary cross entropy from raw logits, computed in the stable
// max(z,0) - z*y + log(1 + exp(-|z|)) form.
double bce_loss(const Tensor& logits, const Tensor& mask);

// d bce_loss / d logits = (sigma(z) - y) / N.
Tensor bce_loss_grad(const Tensor& logits, const Tensor& mask);

// Mean squared difference over all elements.
double mse_consistency(const Tensor& p, const Tensor& q);

// Mean squared difference per sample.
std::vector<double> mse_consistency_per_sample(const Tensor& p, const Tensor& q);

// Confidence of the cached prediction: c = 1 - dice_loss(prev_soft, prev_mask).
// prev_soft is expected to be already temperature-softened. Per-sample mode
// returns one value per sample; per-batch mode returns a single value.
// Confidences act as constants in gradient computation.
std::vector<double> confidence_coefficient(const Tensor& prev_soft, const Tensor& prev_mask,
                                           double eps, ConfidenceMode mode);

// Confidence-weighted consistency between the current pass over the cached
// images and the stored softened prediction:
//   per-sample: (1/n) * sum_i c_i * MSE_i
//   per-batch:  c * MSE
double dcsd_loss(const Tensor& curr_soft_on_prev, const Tensor& prev_soft_stored,
                 const Tensor& prev_mask, ConfidenceMode mode, double eps);

// Same value, plus the gradient with respect to curr_soft_on_prev and the
// confidence coefficients actually used. Confidences may be overridden
// (e.g. forced to 1), in which case prev_mask is not consulted.
double dcsd_loss_with_grad(const Tensor& curr_soft_on_prev, const Tensor& prev_soft_stored,
                           const Tensor& prev_mask, ConfidenceMode mode, double eps,
                           Tensor* grad_wrt_curr_soft, std::vector<double>* confidences_out,
                           const std::vector<double>* confidence_override = nullptr);

// Supervised terms plus composition: total = dice(sigma(out), label) + bce(out, label)
// + T^2 * dcsd_value. The supervised terms are never temperature-softened.
LossBreakdown total_loss(const Tensor& out_logits, const Tensor& label, double dcsd_value,
                         double temperature, double eps);

}  // namespace sdlab
