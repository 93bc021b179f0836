#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sdlab/data.hpp"
#include "sdlab/losses.hpp"
#include "sdlab/model.hpp"

namespace sdlab {

enum class TrainMode { Base, Sd, Dcsd };

TrainMode train_mode_from_string(const std::string& s);  // error lists valid modes
std::string train_mode_to_string(TrainMode m);

struct TrainingConfig {
    double learning_rate = 1e-4;
    int epochs = 30;
    int batch_size = 4;
    double temperature = 4.0;
    ConfidenceMode confidence_mode = ConfidenceMode::PerSample;
    double eps = 1.0;
    double weight_decay = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 1;
    // Test hook: run the dcsd path with every confidence pinned to exactly 1.
    bool force_confidence_one = false;

    void validate() const;
};

// Previous iteration's batch, held as constants. Never reset between epochs.
struct BatchCache {
    Tensor images;         // n x 3 x H x W
    Tensor labels;         // n x 1 x H x W
    Tensor stored_logits;  // n x 1 x H x W, captured before the parameter update

    bool empty() const { return images.n == 0; }
};

struct IterationRecord {
    int epoch = 0;
    int iteration = 0;  // within the epoch
    LossBreakdown breakdown;
    bool has_confidence = false;  // present iff mode == dcsd and cache was non-empty
    double confidence_mean = 0.0;
    double wall_ms = 0.0;
};

// Decoupled-weight-decay adaptive-moment optimizer.
class AdamW {
public:
    explicit AdamW(const TrainingConfig& cfg);
    void step(std::vector<ParamRef>& params);

private:
    double lr_, beta1_, beta2_, eps_, weight_decay_;
    std::int64_t t_ = 0;
    std::vector<Tensor> m_, v_;
};

// Softens both distillation operands with the same temperature. The cached
// operand is a stored constant; no gradient flows through it.
std::pair<Tensor, Tensor> soften_cache_pair(const Tensor& out_pre, const BatchCache& cache,
                                            double temperature);

class Trainer {
public:
    Trainer(SegModel& model, const TrainingConfig& cfg, TrainMode mode);

    // One optimizer step on one batch; updates the cache.
    IterationRecord train_step(const Batch& batch);

    std::vector<IterationRecord> run_epoch(const Dataset& data, int epoch,
                                           std::uint64_t order_seed);

    // Runs cfg.epochs epochs with per-epoch seeded shuffles derived from
    // cfg.seed; optionally writes the CSV log.
    std::vector<IterationRecord> fit(const Dataset& data, const std::string& csv_log_path = "");

    BatchCache& cache() { return cache_; }
    const TrainingConfig& config() const { return cfg_; }
    TrainMode mode() const { return mode_; }

    // Order-sensitive hash of every batch's sample ids, for cross-run audits.
    std::uint64_t batch_sequence_hash() const { return batch_hash_; }

private:
    SegModel& model_;
    TrainingConfig cfg_;
    TrainMode mode_;
    AdamW opt_;
    BatchCache cache_;
    std::uint64_t batch_hash_ = 1469598103934665603ULL;
};

void write_training_log_csv(const std::string& path, const std::vector<IterationRecord>& records);

}  // namespace sdlab
