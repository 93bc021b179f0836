#include "sdlab/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace sdlab {

TrainMode train_mode_from_string(const std::string& s) {
    if (s == "base") return TrainMode::Base;
    if (s == "sd") return TrainMode::Sd;
    if (s == "dcsd") return TrainMode::Dcsd;
    throw std::invalid_argument("unknown training mode '" + s + "' (valid: base, sd, dcsd)");
}

std::string train_mode_to_string(TrainMode m) {
    switch (m) {
        case TrainMode::Base: return "base";
        case TrainMode::Sd: return "sd";
        default: return "dcsd";
    }
}

void TrainingConfig::validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("train: learning_rate must be > 0");
    if (epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
    if (!(temperature > 0.0)) throw std::invalid_argument("train: temperature must be > 0");
    if (!(eps > 0.0)) throw std::invalid_argument("train: eps must be > 0");
    if (weight_decay < 0.0) throw std::invalid_argument("train: weight_decay must be >= 0");
}

// ---------------------------------------------------------------------------
// AdamW
// ---------------------------------------------------------------------------

AdamW::AdamW(const TrainingConfig& cfg)
    : lr_(cfg.learning_rate),
      beta1_(cfg.beta1),
      beta2_(cfg.beta2),
      eps_(cfg.adam_eps),
      weight_decay_(cfg.weight_decay) {}

void AdamW::step(std::vector<ParamRef>& params) {
    if (m_.empty()) {
        m_.reserve(params.size());
        v_.reserve(params.size());
        for (const auto& p : params) {
            m_.push_back(Tensor::zeros_like(*p.value));
            v_.push_back(Tensor::zeros_like(*p.value));
        }
    }
    if (m_.size() != params.size()) {
        throw std::invalid_argument("AdamW: parameter set changed between steps");
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (size_t k = 0; k < params.size(); ++k) {
        double* w = params[k].value->data.data();
        const double* g = params[k].grad->data.data();
        double* m = m_[k].data.data();
        double* v = v_[k].data.data();
        const size_t sz = params[k].value->data.size();
        for (size_t i = 0; i < sz; ++i) {
            m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
            v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            w[i] -= lr_ * (mhat / (std::sqrt(vhat) + eps_) + weight_decay_ * w[i]);
        }
    }
}

// ---------------------------------------------------------------------------
// Trainer
// ---------------------------------------------------------------------------

std::pair<Tensor, Tensor> soften_cache_pair(const Tensor& out_pre, const BatchCache& cache,
                                            double temperature) {
    require_same_shape(out_pre, cache.stored_logits, "soften_cache_pair");
    return {sigmoid_with_temperature(out_pre, temperature),
            sigmoid_with_temperature(cache.stored_logits, temperature)};
}

Trainer::Trainer(SegModel& model, const TrainingConfig& cfg, TrainMode mode)
    : model_(model), cfg_(cfg), mode_(mode), opt_(cfg) {
    cfg_.validate();
}

IterationRecord Trainer::train_step(const Batch& batch) {
    const auto t0 = std::chrono::steady_clock::now();
    if (batch.images.n != batch.labels.n || batch.labels.c != 1 ||
        batch.images.h != batch.labels.h || batch.images.w != batch.labels.w) {
        throw std::invalid_argument("train_step: batch image/label shapes disagree: " +
                                    shape_str(batch.images) + " vs " +
                                    shape_str(batch.labels));
    }
    const double T = cfg_.temperature;

    // supervised pass on the current batch
    Tensor out = model_.forward(batch.images);
    Tensor prob = sigmoid_with_temperature(out, 1.0);
    const double dice = dice_loss(prob, batch.labels, cfg_.eps);
    const double bce = bce_loss(out, batch.labels);

    Tensor grad_logits = bce_loss_grad(out, batch.labels);
    {
        Tensor gd = dice_loss_grad(prob, batch.labels, cfg_.eps);
        Tensor chain = sigmoid_with_temperature_grad(prob, 1.0);
        for (size_t i = 0; i < grad_logits.data.size(); ++i) {
            grad_logits.data[i] += gd.data[i] * chain.data[i];
        }
    }
    model_.zero_grad();
    model_.backward(grad_logits);

    // distillation pass on the cached batch
    double dcsd_val = 0.0;
    bool has_conf = false;
    double conf_mean = 0.0;
    if (mode_ != TrainMode::Base && !cache_.empty()) {
        Tensor out_pre = model_.forward(cache_.images);
        auto [curr_soft, prev_soft] = soften_cache_pair(out_pre, cache_, T);

        std::vector<double> ones;
        const std::vector<double>* override_conf = nullptr;
        if (mode_ == TrainMode::Sd || cfg_.force_confidence_one) {
            ones.assign(cfg_.confidence_mode == ConfidenceMode::PerSample
                            ? static_cast<size_t>(curr_soft.n)
                            : size_t{1},
                        1.0);
            override_conf = &ones;
        }

        Tensor grad_soft;
        std::vector<double> confs;
        dcsd_val = dcsd_loss_with_grad(curr_soft, prev_soft, cache_.labels,
                                       cfg_.confidence_mode, cfg_.eps, &grad_soft, &confs,
                                       override_conf);

        Tensor chain = sigmoid_with_temperature_grad(curr_soft, T);
        Tensor grad_pre = Tensor::zeros_like(out_pre);
        const double t2 = T * T;
        for (size_t i = 0; i < grad_pre.data.size(); ++i) {
            grad_pre.data[i] = t2 * grad_soft.data[i] * chain.data[i];
        }
        model_.backward(grad_pre);

        if (mode_ == TrainMode::Dcsd) {
            has_conf = true;
            conf_mean = std::accumulate(confs.begin(), confs.end(), 0.0) /
                        static_cast<double>(confs.size());
        }
    }

    IterationRecord rec;
    rec.breakdown.dice = dice;
    rec.breakdown.bce = bce;
    rec.breakdown.dcsd = dcsd_val;
    rec.breakdown.total = dice + bce + T * T * dcsd_val;
    rec.has_confidence = has_conf;
    rec.confidence_mean = conf_mean;
    if (!std::isfinite(rec.breakdown.total)) {
        throw std::runtime_error("training aborted: non-finite loss");
    }

    auto params = model_.parameters();
    opt_.step(params);
    model_.step_count += 1;

    // the cache holds this batch with predictions captured before the update
    cache_.images = batch.images;
    cache_.labels = batch.labels;
    cache_.stored_logits = std::move(out);

    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                            t0)
                      .count();
    return rec;
}

std::vector<IterationRecord> Trainer::run_epoch(const Dataset& data, int epoch,
                                                std::uint64_t order_seed) {
    if (data.empty()) {
        throw std::invalid_argument("run_epoch: dataset is empty");
    }
    std::vector<Batch> batches = make_batches(data, cfg_.batch_size, order_seed);
    std::vector<IterationRecord> records;
    records.reserve(batches.size());
    for (size_t it = 0; it < batches.size(); ++it) {
        for (const auto& id : batches[it].ids) {
            batch_hash_ ^= fnv1a(id);
            batch_hash_ *= 1099511628211ULL;
        }
        IterationRecord rec;
        try {
            rec = train_step(batches[it]);
        } catch (const std::runtime_error& e) {
            throw std::runtime_error(std::string(e.what()) + " (epoch " +
                                     std::to_string(epoch) + ", iteration " +
                                     std::to_string(it) + ")");
        }
        rec.epoch = epoch;
        rec.iteration = static_cast<int>(it);
        records.push_back(rec);
    }
    return records;
}

std::vector<IterationRecord> Trainer::fit(const Dataset& data, const std::string& csv_log_path) {
    cfg_.validate();
    std::vector<IterationRecord> all;
    for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
        std::uint64_t order_seed = mix_seed(cfg_.seed, static_cast<std::uint64_t>(epoch));
        auto records = run_epoch(data, epoch, order_seed);
        all.insert(all.end(), records.begin(), records.end());
    }
    if (!csv_log_path.empty()) {
        write_training_log_csv(csv_log_path, all);
    }
    return all;
}

void write_training_log_csv(const std::string& path,
                            const std::vector<IterationRecord>& records) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open training log '" + path + "' for writing");
    f << "epoch,iteration,dice,bce,dcsd,total,confidence_mean,wall_ms\n";
    f.precision(17);
    for (const auto& r : records) {
        f << r.epoch << ',' << r.iteration << ',' << r.breakdown.dice << ',' << r.breakdown.bce
          << ',' << r.breakdown.dcsd << ',' << r.breakdown.total << ',';
        if (r.has_confidence) f << r.confidence_mean;
        f << ',' << r.wall_ms << '\n';
    }
}

}  // namespace sdlab
