#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "tinyunet/kernels.hpp"
#include "tinyunet/tensor.hpp"

namespace tinyunet {

// The (B, F) compression point. B encoder/decoder block pairs, channel
// widths divided by F relative to a base width of 32.
struct ModelConfig {
    int levels = 2;           // B
    int channel_divisor = 4;  // F
    int in_channels = 9;
    int num_classes = 11;
    int base_width = 32;

    void validate() const;
};

struct ChannelSchedule {
    std::vector<int> encoder;  // widths per encoder level, shallow to deep
    int bottleneck = 0;
};

ChannelSchedule channel_schedule(const ModelConfig& cfg);

// Trainable parameters counted for the size metric: conv and transpose-conv
// weights, transpose-conv biases, batchnorm gamma/beta. The 3x3 convs and the
// 1x1 head carry no bias; batchnorm running stats are excluded.
std::int64_t param_count(const ModelConfig& cfg);
double model_size_mib(const ModelConfig& cfg, int bytes_per_param = 4);

// Analytic multiply-accumulate count for an h x w input, with every layer
// charged at the input resolution (a resolution-independent upper bound that
// mirrors the size table's schedule-only accounting).
std::int64_t mac_count(const ModelConfig& cfg, int h, int w);

struct ConvBnParams {
    Tensor w;  // [out_c, in_c, 3, 3]
    std::vector<float> gamma, beta, run_mean, run_var;
};

struct BlockParams {
    ConvBnParams c1, c2;
};

struct DecoderParams {
    Tensor up_w;  // transpose conv [in_c, out_c, 2, 2]
    std::vector<float> up_b;
    BlockParams block;
};

struct NormStats {
    std::vector<float> mean, stddev;  // per input channel
};

struct UNetModel {
    ModelConfig config;
    std::vector<BlockParams> encoder;  // shallow to deep
    BlockParams bottleneck;
    std::vector<DecoderParams> decoder;  // deep to shallow
    Tensor head_w;                       // [num_classes, encoder[0] width, 1, 1]
    NormStats norm_stats;
};

UNetModel build_model(const ModelConfig& cfg, std::uint64_t seed);

// Flat view over every stored tensor, in serialization order.
struct ParamRef {
    std::string name;
    float* data;
    std::size_t size;
    std::vector<int> shape;   // empty entries collapse to {size}
    bool trainable;           // running stats are stored but not trained
};
std::vector<ParamRef> param_refs(UNetModel& model);

struct QuantRange {
    float lo = 0.0f, hi = 0.0f;
};

// Hook applied at activation sites during forward: calibrate records
// min/max per site, apply fake-quantizes with the recorded ranges.
struct QuantContext {
    enum class Mode { calibrate, apply } mode = Mode::calibrate;
    std::map<std::string, QuantRange>* ranges = nullptr;
};

struct ConvBnTrace {
    Tensor conv_in, conv_out;
    ops::BatchNormCache bn_cache;
    Tensor bn_out, relu_out;
};
struct BlockTrace {
    ConvBnTrace c1, c2;
};
struct DecoderTrace {
    Tensor up_in, up_out;
    int skip_channels = 0;
    BlockTrace block;
};
struct ForwardTrace {
    std::vector<BlockTrace> encoder;
    std::vector<ops::PoolResult> pools;
    BlockTrace bottleneck;
    std::vector<DecoderTrace> decoder;
    Tensor head_in;
};

// Runs the graph. Train mode updates batchnorm running stats. Input must be
// normalized, shape (n, in_channels, h, w) with h, w divisible by 2^B.
Tensor forward(UNetModel& model, const Tensor& input, ops::BatchNormMode mode, ForwardTrace* trace = nullptr,
               QuantContext* quant = nullptr);

// Accumulating gradient store keyed by parameter name.
struct GradStore {
    std::unordered_map<std::string, std::vector<float>> grads;

    void add(const std::string& name, const float* g, std::size_t len);
    const std::vector<float>& at(const std::string& name) const;
};

// Gradients of every trainable parameter given d(loss)/d(logits); the
// forward must have been traced in train mode.
GradStore backward(UNetModel& model, const ForwardTrace& trace, const Tensor& d_logits);

// Per-channel (x - mean) / std using the model's stored stats.
Tensor normalize_input(const Tensor& raw, const NormStats& stats);

}  // namespace tinyunet
