#include "tinyunet/metrics.hpp"

#include <json.hpp>

namespace tinyunet {

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& other) {
    for (int k = 0; k < kNumClasses; ++k) {
        tp[k] += other.tp[k];
        fp[k] += other.fp[k];
        fn[k] += other.fn[k];
        tn[k] += other.tn[k];
    }
    return *this;
}

ConfusionCounts confusion(const ClassMap& pred, const ClassMap& truth) {
    if (pred.n != truth.n || pred.h != truth.h || pred.w != truth.w) {
        fail_config("confusion: prediction and truth shapes differ");
    }
    ConfusionCounts c;
    const std::int64_t total = static_cast<std::int64_t>(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const int p = pred.data[i];
        const int t = truth.data[i];
        if (p >= kNumClasses || t >= kNumClasses) fail_data("confusion: class id out of range");
        if (p == t) {
            c.tp[p] += 1;
        } else {
            c.fp[p] += 1;
            c.fn[t] += 1;
        }
    }
    for (int k = 0; k < kNumClasses; ++k) c.tn[k] = total - c.tp[k] - c.fp[k] - c.fn[k];
    return c;
}

namespace {
// 0/0 for a present class (e.g. precision when the class was never predicted)
// counts as 0.
double ratio(std::int64_t num, std::int64_t den) { return den == 0 ? 0.0 : static_cast<double>(num) / den; }
}  // namespace

MetricsReport compute_metrics(const ConfusionCounts& c) {
    MetricsReport r;
    int used = 0;
    double siou = 0, sdice = 0, sprec = 0, srec = 0;
    for (int k = 0; k < kNumClasses; ++k) {
        const std::int64_t support = c.tp[k] + c.fp[k] + c.fn[k];
        r.present[k] = support > 0;
        if (!r.present[k]) {
            ++r.excluded_classes;
            continue;
        }
        r.iou[k] = ratio(c.tp[k], c.tp[k] + c.fp[k] + c.fn[k]);
        r.dice[k] = ratio(2 * c.tp[k], 2 * c.tp[k] + c.fp[k] + c.fn[k]);
        r.precision[k] = ratio(c.tp[k], c.tp[k] + c.fp[k]);
        r.recall[k] = ratio(c.tp[k], c.tp[k] + c.fn[k]);
        siou += r.iou[k];
        sdice += r.dice[k];
        sprec += r.precision[k];
        srec += r.recall[k];
        ++used;
    }
    if (used == 0) fail_data("metrics: all classes absent");
    r.mean_iou = siou / used;
    r.mean_dice = sdice / used;
    r.mean_precision = sprec / used;
    r.mean_recall = srec / used;
    return r;
}

double mean_iou(const ConfusionCounts& c) { return compute_metrics(c).mean_iou; }
double mean_dice(const ConfusionCounts& c) { return compute_metrics(c).mean_dice; }
double mean_precision(const ConfusionCounts& c) { return compute_metrics(c).mean_precision; }
double mean_recall(const ConfusionCounts& c) { return compute_metrics(c).mean_recall; }

std::string MetricsReport::to_json() const {
    nlohmann::json j;
    j["mean_iou"] = mean_iou;
    j["mean_dice"] = mean_dice;
    j["mean_precision"] = mean_precision;
    j["mean_recall"] = mean_recall;
    j["excluded_classes"] = excluded_classes;
    nlohmann::json per;
    for (int k = 0; k < kNumClasses; ++k) {
        per.push_back({{"class", k},
                       {"present", present[k]},
                       {"iou", iou[k]},
                       {"dice", dice[k]},
                       {"precision", precision[k]},
                       {"recall", recall[k]}});
    }
    j["per_class"] = per;
    return j.dump(2);
}

}  // namespace tinyunet
