#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "tinyunet/scenegen.hpp"
#include "tinyunet/tensor.hpp"
#include "tinyunet/unet.hpp"

namespace tinyunet {

enum class OptimizerKind { adam, sgd };

struct TrainConfig {
    int epochs = 10;
    int batch_size = 16;
    double learning_rate = 0.0008;
    std::uint64_t seed = 0;
    OptimizerKind optimizer = OptimizerKind::adam;
    double adam_beta1 = 0.9, adam_beta2 = 0.999, adam_eps = 1e-8;

    void validate() const;
};

struct EpochRow {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_miou = 0.0;
    double seconds = 0.0;
};

struct TrainReport {
    std::vector<EpochRow> epochs;

    std::string to_csv() const;
    void save_csv(const std::filesystem::path& path) const;
};

// Mean over all pixels of -log softmax(logits)[label]; also returns
// d(loss)/d(logits) = (softmax - onehot) / pixel_count.
std::pair<double, Tensor> cross_entropy_loss(const Tensor& logits, const ClassMap& labels);

// Per-channel mean/std over every training pixel; errors on a zero-variance channel.
NormStats fit_norm_stats(const scene::SceneSet& training_set);

// Deterministic mini-batch training per the given config; mutates the model
// in place and returns the per-epoch report.
TrainReport train(UNetModel& model, const scene::SceneSet& train_set, const scene::SceneSet& val_set,
                  const TrainConfig& cfg);

// Argmax over the class axis per pixel.
ClassMap predict_classes(const Tensor& logits);

// Validation mean IoU of a trained model (infer mode, normalized inputs).
double evaluate_miou(UNetModel& model, const scene::SceneSet& set);

}  // namespace tinyunet
