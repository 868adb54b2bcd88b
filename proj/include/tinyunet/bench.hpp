#pragma once

#include <string>

#include "tinyunet/quantize.hpp"
#include "tinyunet/unet.hpp"

namespace tinyunet {

struct BenchConfig {
    int runs = 50;      // measured runs after warmup, must be >= 30
    int warmup = 5;
    int height = 32, width = 32;

    void validate() const;
};

struct BenchReport {
    ModelConfig model_config;
    bool quantized = false;
    int height = 0, width = 0;
    int runs = 0, warmup = 0;
    double mean_ms = 0.0, median_ms = 0.0, p95_ms = 0.0;
    std::int64_t macs_per_inference = 0;  // analytic count
    std::string host;

    std::string to_json() const;
};

BenchReport bench_float(UNetModel& model, const BenchConfig& cfg);
BenchReport bench_quantized(const QuantizedModel& qmodel, const BenchConfig& cfg);

}  // namespace tinyunet
