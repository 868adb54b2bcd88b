#include "tinyunet/bench.hpp"

#include <algorithm>
#include <chrono>
#include <json.hpp>
#include <random>

#ifdef __linux__
#include <sys/utsname.h>
#endif

namespace tinyunet {

void BenchConfig::validate() const {
    if (runs < 30) fail_config("bench needs at least 30 measured runs, got " + std::to_string(runs));
    if (warmup < 0) fail_config("warmup must be >= 0");
    if (height < 1 || width < 1) fail_config("bench input dims must be positive");
}

namespace {

std::string host_descriptor() {
#ifdef __linux__
    utsname u{};
    if (uname(&u) == 0) return std::string(u.sysname) + " " + u.machine + " " + u.release;
#endif
    return "unknown";
}

Tensor random_input(int channels, int h, int w) {
    Tensor t(1, channels, h, w);
    std::mt19937_64 rng(1234);
    std::normal_distribution<float> dist(0.0f, 1.0f);
    for (float& v : t.data) v = dist(rng);
    return t;
}

template <typename RunFn>
BenchReport measure(const ModelConfig& mc, bool quantized, const BenchConfig& cfg, RunFn&& run) {
    cfg.validate();
    for (int i = 0; i < cfg.warmup; ++i) run();

    std::vector<double> ms(cfg.runs);
    for (int i = 0; i < cfg.runs; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        run();
        ms[i] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    }
    std::sort(ms.begin(), ms.end());

    BenchReport r;
    r.model_config = mc;
    r.quantized = quantized;
    r.height = cfg.height;
    r.width = cfg.width;
    r.runs = cfg.runs;
    r.warmup = cfg.warmup;
    double sum = 0.0;
    for (double v : ms) sum += v;
    r.mean_ms = sum / ms.size();
    r.median_ms = ms[ms.size() / 2];
    r.p95_ms = ms[std::min(ms.size() - 1, static_cast<std::size_t>(ms.size() * 95 / 100))];
    r.macs_per_inference = mac_count(mc, cfg.height, cfg.width);
    r.host = host_descriptor();
    return r;
}

}  // namespace

BenchReport bench_float(UNetModel& model, const BenchConfig& cfg) {
    const Tensor input = random_input(model.config.in_channels, cfg.height, cfg.width);
    return measure(model.config, false, cfg,
                   [&] { forward(model, input, ops::BatchNormMode::infer); });
}

BenchReport bench_quantized(const QuantizedModel& qmodel, const BenchConfig& cfg) {
    UNetModel model = dequantize_model(qmodel);
    std::map<std::string, QuantRange> ranges = qmodel.act_ranges;
    const Tensor input = random_input(model.config.in_channels, cfg.height, cfg.width);
    return measure(qmodel.config, true, cfg, [&] {
        QuantContext qc;
        qc.mode = QuantContext::Mode::apply;
        qc.ranges = &ranges;
        forward(model, input, ops::BatchNormMode::infer, nullptr, &qc);
    });
}

std::string BenchReport::to_json() const {
    nlohmann::json j;
    j["config"] = {{"B", model_config.levels}, {"F", model_config.channel_divisor}};
    j["quantized"] = quantized;
    j["input"] = {{"channels", model_config.in_channels}, {"height", height}, {"width", width}};
    j["runs"] = runs;
    j["warmup"] = warmup;
    j["mean_ms"] = mean_ms;
    j["median_ms"] = median_ms;
    j["p95_ms"] = p95_ms;
    j["macs_per_inference"] = macs_per_inference;
    j["host"] = host;
    return j.dump(2);
}

}  // namespace tinyunet
