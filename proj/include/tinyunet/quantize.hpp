#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tinyunet/scenegen.hpp"
#include "tinyunet/tensor.hpp"
#include "tinyunet/unet.hpp"

namespace tinyunet {

struct QuantParams {
    float scale = 1.0f;
    int zero_point = 0;  // 0..255
};

// Per-tensor asymmetric uint8 affine quantization over a zero-extended
// min/max range (the grid always represents 0 exactly). Degenerate
// constant-zero tensors get scale 1, zero point 0.
QuantParams quant_params_for(std::span<const float> values);
std::vector<std::uint8_t> quantize_values(std::span<const float> values, const QuantParams& qp);
std::vector<float> dequantize_values(std::span<const std::uint8_t> payload, const QuantParams& qp);

std::pair<std::vector<std::uint8_t>, QuantParams> quantize_tensor(std::span<const float> values);

struct QuantizedTensor {
    std::string name;
    std::vector<int> shape;
    QuantParams qp;
    std::vector<std::uint8_t> payload;
};

// 8-bit snapshot of a trained model: every trainable tensor quantized
// per-tensor, batchnorm running statistics kept as float calibration
// constants, plus per-activation-site ranges from calibration.
struct QuantizedModel {
    ModelConfig config;
    NormStats norm_stats;
    std::vector<QuantizedTensor> tensors;
    std::map<std::string, std::vector<float>> running_stats;
    std::map<std::string, QuantRange> act_ranges;
};

// Running per-site min/max over forward passes of the calibration set
// (inputs are normalized with the model's stats first).
std::map<std::string, QuantRange> calibrate(UNetModel& model, const scene::SceneSet& calibration_set);

QuantizedModel quantize_model(UNetModel& model, const scene::SceneSet& calibration_set);

// Reconstructs the float model with quantize->dequantize applied to every
// quantized tensor.
UNetModel dequantize_model(const QuantizedModel& qmodel);

// Simulated-quantization inference: dequantized weights, activations passed
// through the 8-bit grid at each calibrated site, arithmetic in float.
Tensor quantized_forward(const QuantizedModel& qmodel, const Tensor& input);

double evaluate_miou_quantized(const QuantizedModel& qmodel, const scene::SceneSet& set);

}  // namespace tinyunet
