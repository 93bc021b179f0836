#include "sdlab/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace sdlab {

namespace {

inline double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    double e = std::exp(z);
    return e / (1.0 + e);
}

void require_temperature(double t) {
    if (!(t > 0.0)) {
        throw std::invalid_argument("temperature must be > 0");
    }
}

void require_eps(double eps) {
    if (!(eps > 0.0)) {
        throw std::invalid_argument("dice smoothing eps must be > 0");
    }
}

}  // namespace

Tensor sigmoid_with_temperature(const Tensor& logits, double temperature) {
    require_temperature(temperature);
    Tensor out = Tensor::zeros_like(logits);
    const size_t m = logits.data.size();
    for (size_t i = 0; i < m; ++i) {
        out.data[i] = sigmoid(logits.data[i] / temperature);
    }
    return out;
}

Tensor sigmoid_with_temperature_grad(const Tensor& soft, double temperature) {
    require_temperature(temperature);
    Tensor out = Tensor::zeros_like(soft);
    const size_t m = soft.data.size();
    for (size_t i = 0; i < m; ++i) {
        double p = soft.data[i];
        out.data[i] = p * (1.0 - p) / temperature;
    }
    return out;
}

double dice_loss(const Tensor& prob, const Tensor& mask, double eps) {
    require_same_shape(prob, mask, "dice_loss");
    require_eps(eps);
    double inter = 0.0, psum = 0.0, ysum = 0.0;
    const size_t m = prob.data.size();
    for (size_t i = 0; i < m; ++i) {
        inter += prob.data[i] * mask.data[i];
        psum += prob.data[i];
        ysum += mask.data[i];
    }
    return 1.0 - (2.0 * inter + eps) / (psum + ysum + eps);
}

std::vector<double> dice_loss_per_sample(const Tensor& prob, const Tensor& mask, double eps) {
    require_same_shape(prob, mask, "dice_loss_per_sample");
    require_eps(eps);
    const size_t m = static_cast<size_t>(prob.c) * prob.h * prob.w;
    std::vector<double> out(prob.n);
    for (int i = 0; i < prob.n; ++i) {
        const double* p = prob.sample_ptr(i);
        const double* y = mask.sample_ptr(i);
        double inter = 0.0, psum = 0.0, ysum = 0.0;
        for (size_t k = 0; k < m; ++k) {
            inter += p[k] * y[k];
            psum += p[k];
            ysum += y[k];
        }
        out[i] = 1.0 - (2.0 * inter + eps) / (psum + ysum + eps);
    }
    return out;
}

Tensor dice_loss_grad(const Tensor& prob, const Tensor& mask, double eps) {
    require_same_shape(prob, mask, "dice_loss_grad");
    require_eps(eps);
    double inter = 0.0, psum = 0.0, ysum = 0.0;
    const size_t m = prob.data.size();
    for (size_t i = 0; i < m; ++i) {
        inter += prob.data[i] * mask.data[i];
        psum += prob.data[i];
        ysum += mask.data[i];
    }
    const double num = 2.0 * inter + eps;
    const double den = psum + ysum + eps;
    // loss = 1 - num/den; d/dp_i = -(2*y_i*den - num) / den^2
    Tensor grad = Tensor::zeros_like(prob);
    const double inv_den2 = 1.0 / (den * den);
    for (size_t i = 0; i < m; ++i) {
        grad.data[i] = -(2.0 * mask.data[i] * den - num) * inv_den2;
    }
    return grad;
}

double bce_loss(const Tensor& logits, const Tensor& mask) {
    require_same_shape(logits, mask, "bce_loss");
    double sum = 0.0;
    const size_t m = logits.data.size();
    for (size_t i = 0; i < m; ++i) {
        double z = logits.data[i];
        double y = mask.data[i];
        sum += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
    }
    return sum / static_cast<double>(m);
}

Tensor bce_loss_grad(const Tensor& logits, const Tensor& mask) {
    require_same_shape(logits, mask, "bce_loss_grad");
    Tensor grad = Tensor::zeros_like(logits);
    const size_t m = logits.data.size();
    const double inv = 1.0 / static_cast<double>(m);
    for (size_t i = 0; i < m; ++i) {
        grad.data[i] = (sigmoid(logits.data[i]) - mask.data[i]) * inv;
    }
    return grad;
}

double mse_consistency(const Tensor& p, const Tensor& q) {
    require_same_shape(p, q, "mse_consistency");
    double sum = 0.0;
    const size_t m = p.data.size();
    for (size_t i = 0; i < m; ++i) {
        double d = p.data[i] - q.data[i];
        sum += d * d;
    }
    return sum / static_cast<double>(m);
}

std::vector<double> mse_consistency_per_sample(const Tensor& p, const Tensor& q) {
    require_same_shape(p, q, "mse_consistency_per_sample");
    const size_t m = static_cast<size_t>(p.c) * p.h * p.w;
    std::vector<double> out(p.n);
    for (int i = 0; i < p.n; ++i) {
        const double* a = p.sample_ptr(i);
        const double* b = q.sample_ptr(i);
        double sum = 0.0;
        for (size_t k = 0; k < m; ++k) {
            double d = a[k] - b[k];
            sum += d * d;
        }
        out[i] = sum / static_cast<double>(m);
    }
    return out;
}

std::vector<double> confidence_coefficient(const Tensor& prev_soft, const Tensor& prev_mask,
                                           double eps, ConfidenceMode mode) {
    require_same_shape(prev_soft, prev_mask, "confidence_coefficient");
    if (mode == ConfidenceMode::PerSample) {
        std::vector<double> c = dice_loss_per_sample(prev_soft, prev_mask, eps);
        for (double& v : c) v = 1.0 - v;
        return c;
    }
    return {1.0 - dice_loss(prev_soft, prev_mask, eps)};
}

double dcsd_loss(const Tensor& curr_soft_on_prev, const Tensor& prev_soft_stored,
                 const Tensor& prev_mask, ConfidenceMode mode, double eps) {
    return dcsd_loss_with_grad(curr_soft_on_prev, prev_soft_stored, prev_mask, mode, eps,
                               nullptr, nullptr);
}

double dcsd_loss_with_grad(const Tensor& curr_soft_on_prev, const Tensor& prev_soft_stored,
                           const Tensor& prev_mask, ConfidenceMode mode, double eps,
                           Tensor* grad_wrt_curr_soft, std::vector<double>* confidences_out,
                           const std::vector<double>* confidence_override) {
    require_same_shape(curr_soft_on_prev, prev_soft_stored, "dcsd_loss");
    if (confidence_override == nullptr) {
        require_same_shape(curr_soft_on_prev, prev_mask, "dcsd_loss");
    }

    std::vector<double> conf;
    if (confidence_override != nullptr) {
        conf = *confidence_override;
        size_t expect = mode == ConfidenceMode::PerSample
                            ? static_cast<size_t>(curr_soft_on_prev.n)
                            : size_t{1};
        if (conf.size() != expect) {
            throw std::invalid_argument("dcsd_loss: confidence override size mismatch");
        }
    } else {
        conf = confidence_coefficient(prev_soft_stored, prev_mask, eps, mode);
    }
    if (confidences_out != nullptr) *confidences_out = conf;

    const int n = curr_soft_on_prev.n;
    const size_t m = static_cast<size_t>(curr_soft_on_prev.c) * curr_soft_on_prev.h *
                     curr_soft_on_prev.w;
    if (grad_wrt_curr_soft != nullptr) {
        *grad_wrt_curr_soft = Tensor::zeros_like(curr_soft_on_prev);
    }

    if (mode == ConfidenceMode::PerSample) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            const double* p = curr_soft_on_prev.sample_ptr(i);
            const double* q = prev_soft_stored.sample_ptr(i);
            double sum = 0.0;
            for (size_t k = 0; k < m; ++k) {
                double d = p[k] - q[k];
                sum += d * d;
            }
            acc += conf[i] * (sum / static_cast<double>(m));
            if (grad_wrt_curr_soft != nullptr) {
                double* g = grad_wrt_curr_soft->sample_ptr(i);
                const double scale = conf[i] * 2.0 / (static_cast<double>(m) * n);
                for (size_t k = 0; k < m; ++k) {
                    g[k] = scale * (p[k] - q[k]);
                }
            }
        }
        return acc / static_cast<double>(n);
    }

    // per-batch: one coefficient times the pooled MSE
    const double c = conf[0];
    const size_t total = curr_soft_on_prev.data.size();
    double sum = 0.0;
    for (size_t k = 0; k < total; ++k) {
        double d = curr_soft_on_prev.data[k] - prev_soft_stored.data[k];
        sum += d * d;
    }
    if (grad_wrt_curr_soft != nullptr) {
        const double scale = c * 2.0 / static_cast<double>(total);
        for (size_t k = 0; k < total; ++k) {
            grad_wrt_curr_soft->data[k] =
                scale * (curr_soft_on_prev.data[k] - prev_soft_stored.data[k]);
        }
    }
    return c * (sum / static_cast<double>(total));
}

LossBreakdown total_loss(const Tensor& out_logits, const Tensor& label, double dcsd_value,
                         double temperature, double eps) {
    require_temperature(temperature);
    if (dcsd_value < 0.0) {
        throw std::invalid_argument("total_loss: dcsd_value must be >= 0");
    }
    LossBreakdown b;
    b.dice = dice_loss(sigmoid_with_temperature(out_logits, 1.0), label, eps);
    b.bce = bce_loss(out_logits, label);
    b.dcsd = dcsd_value;
    b.total = b.dice + b.bce + temperature * temperature * b.dcsd;
    return b;
}

}  // namespace sdlab
