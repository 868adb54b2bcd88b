#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "tinyunet/tensor.hpp"

namespace tinyunet {

constexpr int kNumClasses = 11;

// One-vs-rest pixel counts per class. 64-bit accumulation.
struct ConfusionCounts {
    std::array<std::int64_t, kNumClasses> tp{}, fp{}, fn{}, tn{};

    ConfusionCounts& operator+=(const ConfusionCounts& other);
};

ConfusionCounts confusion(const ClassMap& pred, const ClassMap& truth);

struct MetricsReport {
    double mean_iou = 0.0, mean_dice = 0.0, mean_precision = 0.0, mean_recall = 0.0;
    std::array<double, kNumClasses> iou{}, dice{}, precision{}, recall{};
    std::array<bool, kNumClasses> present{};  // class appears in prediction or truth
    int excluded_classes = 0;                 // absent classes left out of the means

    std::string to_json() const;
};

// Classes absent from both prediction and truth (tp+fp+fn == 0) are excluded
// from the means; the exclusion count is reported.
MetricsReport compute_metrics(const ConfusionCounts& counts);

double mean_iou(const ConfusionCounts& counts);
double mean_dice(const ConfusionCounts& counts);
double mean_precision(const ConfusionCounts& counts);
double mean_recall(const ConfusionCounts& counts);

}  // namespace tinyunet
