#pragma once

#include <filesystem>
#include <vector>

#include "tinyunet/metrics.hpp"
#include "tinyunet/quantize.hpp"
#include "tinyunet/scenegen.hpp"
#include "tinyunet/trainer.hpp"

namespace tinyunet {

// Full metrics of a model over a scene set (infer mode, inputs normalized
// with the model's stats).
MetricsReport evaluate_model(UNetModel& model, const scene::SceneSet& set);
MetricsReport evaluate_quantized_model(const QuantizedModel& qmodel, const scene::SceneSet& set);

struct SweepRow {
    int levels = 0, channel_divisor = 0;
    MetricsReport float_metrics, quant_metrics;
    double model_size_mib = 0.0;
    bool best_iou = false;   // highest float IoU over the grid
    bool baseline = false;   // the uncompressed (B=4, F=1) point
};

// Trains and evaluates every point of the 4x5 (B, F) grid with a shared
// seed. Metric columns are surrogate-relative; the size column is analytic.
std::vector<SweepRow> run_sweep(const scene::SceneSet& train_set, const scene::SceneSet& val_set,
                                const TrainConfig& train_cfg);

std::string sweep_csv(const std::vector<SweepRow>& rows);
void save_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows);

// The 20-row analytic size table: B, F, params, MiB. Also used by the CLI
// size-table verb.
std::string size_table_csv();

}  // namespace tinyunet
