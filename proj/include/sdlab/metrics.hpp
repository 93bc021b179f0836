#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sdlab/data.hpp"
#include "sdlab/tensor.hpp"

namespace sdlab {

struct ConfusionCounts {
    std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
    std::int64_t total() const { return tp + fp + fn + tn; }
};

struct ImageMetrics {
    double dice = 0.0, iou = 0.0, precision = 0.0, recall = 0.0;
};

struct MetricsReport {
    struct Row {
        std::string id;
        ImageMetrics m;
    };
    std::vector<Row> per_image;
    double mean_dice = 0.0, mean_iou = 0.0, mean_precision = 0.0, mean_recall = 0.0;
    // Pooled-count alternative to the per-image macro means.
    ImageMetrics micro;
};

// element >= threshold -> 1, else 0 (inclusive boundary).
Tensor binarize(const Tensor& prob, double threshold = 0.5);

ConfusionCounts confusion_counts(const Tensor& pred, const Tensor& gt);

// Count-based metrics with the degenerate conventions: all four are 1 when
// prediction and ground truth are both empty; any other zero denominator
// yields 0 for that metric.
ImageMetrics image_metrics(const ConfusionCounts& c);

// Evaluates samples one by one through `forward_logits` (a batch-of-one logit
// map per image), binarizes at `threshold`, and reports per-image metrics plus
// macro means and pooled micro metrics.
MetricsReport evaluate_dataset(const std::function<Tensor(const Tensor&)>& forward_logits,
                               const Dataset& data, double threshold = 0.5);

void write_metrics_json(const MetricsReport& r, const std::string& path);
void write_metrics_table(const MetricsReport& r, const std::string& path,
                         const std::string& title);
void write_metrics_per_image_csv(const MetricsReport& r, const std::string& path);

}  // namespace sdlab
