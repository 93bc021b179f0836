#include "sdlab/metrics.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>

#include "json.hpp"

namespace sdlab {

Tensor binarize(const Tensor& prob, double threshold) {
    Tensor out = Tensor::zeros_like(prob);
    for (size_t i = 0; i < prob.data.size(); ++i) {
        out.data[i] = prob.data[i] >= threshold ? 1.0 : 0.0;
    }
    return out;
}

ConfusionCounts confusion_counts(const Tensor& pred, const Tensor& gt) {
    require_same_shape(pred, gt, "confusion_counts");
    ConfusionCounts c;
    for (size_t i = 0; i < pred.data.size(); ++i) {
        const bool p = pred.data[i] != 0.0;
        const bool y = gt.data[i] != 0.0;
        if (p && y) ++c.tp;
        else if (p && !y) ++c.fp;
        else if (!p && y) ++c.fn;
        else ++c.tn;
    }
    return c;
}

ImageMetrics image_metrics(const ConfusionCounts& c) {
    ImageMetrics m;
    if (c.tp == 0 && c.fp == 0 && c.fn == 0) {
        // both prediction and ground truth empty
        m.dice = m.iou = m.precision = m.recall = 1.0;
        return m;
    }
    m.dice = (2 * c.tp + c.fp + c.fn) > 0
                 ? (2.0 * c.tp) / static_cast<double>(2 * c.tp + c.fp + c.fn)
                 : 0.0;
    m.iou = (c.tp + c.fp + c.fn) > 0 ? static_cast<double>(c.tp) / (c.tp + c.fp + c.fn) : 0.0;
    m.precision = (c.tp + c.fp) > 0 ? static_cast<double>(c.tp) / (c.tp + c.fp) : 0.0;
    m.recall = (c.tp + c.fn) > 0 ? static_cast<double>(c.tp) / (c.tp + c.fn) : 0.0;
    return m;
}

MetricsReport evaluate_dataset(const std::function<Tensor(const Tensor&)>& forward_logits,
                               const Dataset& data, double threshold) {
    if (data.empty()) {
        throw std::invalid_argument("evaluate_dataset: dataset is empty");
    }
    MetricsReport r;
    ConfusionCounts pooled;
    for (const Sample& s : data.samples) {
        Tensor logits = forward_logits(s.image);
        Tensor prob = Tensor::zeros_like(logits);
        for (size_t i = 0; i < logits.data.size(); ++i) {
            double z = logits.data[i];
            prob.data[i] = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z))
                                    : std::exp(z) / (1.0 + std::exp(z));
        }
        ConfusionCounts c = confusion_counts(binarize(prob, threshold), s.mask);
        r.per_image.push_back({s.id, image_metrics(c)});
        pooled.tp += c.tp;
        pooled.fp += c.fp;
        pooled.fn += c.fn;
        pooled.tn += c.tn;
    }
    const double n = static_cast<double>(r.per_image.size());
    for (const auto& row : r.per_image) {
        r.mean_dice += row.m.dice;
        r.mean_iou += row.m.iou;
        r.mean_precision += row.m.precision;
        r.mean_recall += row.m.recall;
    }
    r.mean_dice /= n;
    r.mean_iou /= n;
    r.mean_precision /= n;
    r.mean_recall /= n;
    r.micro = image_metrics(pooled);
    return r;
}

void write_metrics_json(const MetricsReport& r, const std::string& path) {
    nlohmann::json j;
    j["mean"] = {{"dice", r.mean_dice},
                 {"iou", r.mean_iou},
                 {"precision", r.mean_precision},
                 {"recall", r.mean_recall}};
    j["micro"] = {{"dice", r.micro.dice},
                  {"iou", r.micro.iou},
                  {"precision", r.micro.precision},
                  {"recall", r.micro.recall}};
    j["count"] = r.per_image.size();
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.per_image) {
        rows.push_back({{"id", row.id},
                        {"dice", row.m.dice},
                        {"iou", row.m.iou},
                        {"precision", row.m.precision},
                        {"recall", row.m.recall}});
    }
    j["per_image"] = rows;
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write metrics file '" + path + "'");
    f << j.dump(2) << "\n";
}

void write_metrics_table(const MetricsReport& r, const std::string& path,
                         const std::string& title) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write metrics table '" + path + "'");
    f << title << "  (" << r.per_image.size() << " images, macro average)\n";
    f << std::fixed << std::setprecision(4);
    f << "  Dice       " << r.mean_dice << "\n";
    f << "  IoU        " << r.mean_iou << "\n";
    f << "  Precision  " << r.mean_precision << "\n";
    f << "  Recall     " << r.mean_recall << "\n";
}

void write_metrics_per_image_csv(const MetricsReport& r, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write per-image csv '" + path + "'");
    f << "id,dice,iou,precision,recall\n";
    f.precision(17);
    for (const auto& row : r.per_image) {
        f << row.id << ',' << row.m.dice << ',' << row.m.iou << ',' << row.m.precision << ','
          << row.m.recall << '\n';
    }
}

}  // namespace sdlab
