#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "tinyunet/tensor.hpp"

namespace tinyunet::ops {

// Gradients of one layer w.r.t. its input, weights and bias.
struct LayerGrad {
    Tensor d_input;
    Tensor d_weights;
    std::vector<float> d_bias;
};

// 3x3 stride-1 "same" convolution (pad 1) or 1x1 convolution (pad 0),
// dispatched on the kernel size of `weights` [out_c, in_c, k, k].
// `bias` is either empty (no bias) or length out_c.
Tensor conv2d_forward(const Tensor& input, const Tensor& weights, std::span<const float> bias);
LayerGrad conv2d_backward(const Tensor& input, const Tensor& weights, const Tensor& d_output);

Tensor conv1x1_forward(const Tensor& input, const Tensor& weights, std::span<const float> bias);

struct PoolResult {
    Tensor output;
    std::vector<std::uint32_t> argmax;  // flat input index per output cell, ties -> first in row-major window order
};
PoolResult maxpool2x2(const Tensor& input);
Tensor maxpool2x2_backward(const PoolResult& fwd, const Tensor& d_output, int in_h, int in_w);

// 2x2 stride-2 transpose convolution; weights [in_c, out_c, 2, 2].
Tensor transpose_conv2x2(const Tensor& input, const Tensor& weights, std::span<const float> bias);
LayerGrad transpose_conv2x2_backward(const Tensor& input, const Tensor& weights, const Tensor& d_output);

enum class BatchNormMode { train, infer };

struct BatchNormCache {
    std::vector<float> mean;     // batch mean used for normalization
    std::vector<float> inv_std;  // 1/sqrt(var + eps)
};

// Train mode normalizes with batch statistics (biased variance) and updates
// running stats in place; infer mode reads the running stats.
Tensor batchnorm_forward(const Tensor& input, std::span<const float> gamma, std::span<const float> beta,
                         std::vector<float>& running_mean, std::vector<float>& running_var, BatchNormMode mode,
                         float momentum, float eps, BatchNormCache* cache = nullptr);

struct BatchNormGrad {
    Tensor d_input;
    std::vector<float> d_gamma;
    std::vector<float> d_beta;
};
// Gradients of the train-mode forward (batch statistics participate).
BatchNormGrad batchnorm_backward(const Tensor& input, std::span<const float> gamma, const BatchNormCache& cache,
                                 const Tensor& d_output);

Tensor relu(const Tensor& input);
Tensor relu_backward(const Tensor& input, const Tensor& d_output);

Tensor concat_channels(const Tensor& a, const Tensor& b);
// Inverse of concat_channels: slices d (or any tensor) back into [0,c_a) and [c_a,c).
std::pair<Tensor, Tensor> split_channels(const Tensor& t, int c_a);

Tensor softmax_channels(const Tensor& input);
// d_input given the softmax output and upstream gradient.
Tensor softmax_channels_backward(const Tensor& softmax_out, const Tensor& d_output);

}  // namespace tinyunet::ops
