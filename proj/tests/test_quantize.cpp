#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "test_support.hpp"
#include "tinyunet/quantize.hpp"
#include "tinyunet/trainer.hpp"

using namespace tinyunet;
using namespace testsup;

TEST_CASE("all-zero tensor quantizes with the degenerate defaults") {
    std::vector<float> zeros(64, 0.0f);
    auto [payload, qp] = quantize_tensor(zeros);
    CHECK(qp.scale == 1.0f);
    CHECK(qp.zero_point == 0);
    for (std::uint8_t q : payload) CHECK(q == 0);
    std::vector<float> back = dequantize_values(payload, qp);
    for (float v : back) CHECK(v == 0.0f);
}

TEST_CASE("values {-1, 1} get scale 2/255 and small round-trip error") {
    std::vector<float> vals{-1.0f, 1.0f};
    auto [payload, qp] = quantize_tensor(vals);
    CHECK(qp.scale == doctest::Approx(2.0 / 255.0).epsilon(1e-7));
    std::vector<float> back = dequantize_values(payload, qp);
    CHECK(std::abs(back[0] + 1.0f) <= 1.0f / 255.0f);
    CHECK(std::abs(back[1] - 1.0f) <= 1.0f / 255.0f);
}

TEST_CASE("round-trip error is bounded by scale/2 on random tensors") {
    std::mt19937_64 rng(1);
    for (int rep = 0; rep < 50; ++rep) {
        std::uniform_real_distribution<float> span(0.1f, 20.0f);
        const float lo = -span(rng), hi = span(rng);
        std::vector<float> vals(257);
        std::uniform_real_distribution<float> dist(lo, hi);
        for (float& v : vals) v = dist(rng);
        auto [payload, qp] = quantize_tensor(vals);
        std::vector<float> back = dequantize_values(payload, qp);
        for (std::size_t i = 0; i < vals.size(); ++i)
            CHECK(std::abs(vals[i] - back[i]) <= qp.scale / 2.0f + 1e-7f);
    }
}

TEST_CASE("quantization grid always represents zero exactly") {
    // The calibration range is zero-extended, so dequantize(zp) == 0 even for
    // one-sided tensors.
    std::vector<float> positive{0.5f, 1.5f, 3.0f};
    auto [payload, qp] = quantize_tensor(positive);
    CHECK(qp.zero_point == 0);  // min of the extended range is 0
    std::vector<std::uint8_t> zp_code{static_cast<std::uint8_t>(qp.zero_point)};
    CHECK(dequantize_values(zp_code, qp)[0] == 0.0f);
    std::vector<float> negative{-2.0f, -0.25f};
    auto qneg = quant_params_for(negative);
    CHECK(qneg.zero_point == 255);  // max of the extended range is 0
}

TEST_CASE("quantize(dequantize(q)) is the identity on all 256 code points") {
    std::mt19937_64 rng(2);
    for (int rep = 0; rep < 20; ++rep) {
        QuantParams qp;
        qp.scale = std::uniform_real_distribution<float>(1e-4f, 10.0f)(rng);
        qp.zero_point = std::uniform_int_distribution<int>(0, 255)(rng);
        std::vector<std::uint8_t> codes(256);
        for (int q = 0; q < 256; ++q) codes[q] = static_cast<std::uint8_t>(q);
        std::vector<float> values = dequantize_values(codes, qp);
        std::vector<std::uint8_t> back = quantize_values(values, qp);
        CHECK(back == codes);
    }
}

TEST_CASE("calibration ranges grow monotonically and merge like min/max") {
    scene::SceneConfig sc;
    sc.height = 16;
    sc.width = 16;
    auto [train_set, val_set] = scene::generate_set(12, sc, scene::RadarConfig{}, 7);

    ModelConfig mc;
    mc.levels = 1;
    mc.channel_divisor = 8;
    UNetModel model = build_model(mc, 1);
    model.norm_stats = fit_norm_stats(train_set);

    scene::SceneSet first, second, both;
    for (auto* dst : {&first, &second, &both}) {
        dst->scene_cfg = train_set.scene_cfg;
        dst->radar_cfg = train_set.radar_cfg;
    }
    first.cubes = {train_set.cubes[0]};
    first.labels = {train_set.labels[0]};
    second.cubes = {train_set.cubes[1]};
    second.labels = {train_set.labels[1]};
    both.cubes = {train_set.cubes[0], train_set.cubes[1]};
    both.labels = {train_set.labels[0], train_set.labels[1]};

    auto ra = calibrate(model, first);
    auto rb = calibrate(model, second);
    auto rab = calibrate(model, both);
    REQUIRE(!ra.empty());
    REQUIRE(ra.size() == rab.size());
    for (const auto& [site, range] : rab) {
        // Two-sample calibration is the elementwise min/max merge.
        CHECK(range.lo == doctest::Approx(std::min(ra.at(site).lo, rb.at(site).lo)).epsilon(1e-7));
        CHECK(range.hi == doctest::Approx(std::max(ra.at(site).hi, rb.at(site).hi)).epsilon(1e-7));
        // And contains each single-sample range (monotone growth).
        CHECK(range.lo <= ra.at(site).lo);
        CHECK(range.hi >= ra.at(site).hi);
    }
}

TEST_CASE("quantized model covers every trainable tensor exactly once") {
    scene::SceneConfig sc;
    sc.height = 16;
    sc.width = 16;
    auto [train_set, val_set] = scene::generate_set(12, sc, scene::RadarConfig{}, 9);
    ModelConfig mc;
    mc.levels = 2;
    mc.channel_divisor = 8;
    UNetModel model = build_model(mc, 2);
    model.norm_stats = fit_norm_stats(train_set);
    QuantizedModel qm = quantize_model(model, val_set);

    std::vector<std::string> qnames;
    std::size_t qparams = 0;
    for (const QuantizedTensor& t : qm.tensors) {
        qnames.push_back(t.name);
        qparams += t.payload.size();
    }
    std::sort(qnames.begin(), qnames.end());
    CHECK(std::adjacent_find(qnames.begin(), qnames.end()) == qnames.end());
    CHECK(qparams == static_cast<std::size_t>(param_count(mc)));
}

TEST_CASE("a model on its own 8-bit grid survives fake quantization of weights") {
    scene::SceneConfig sc;
    sc.height = 16;
    sc.width = 16;
    auto [train_set, val_set] = scene::generate_set(12, sc, scene::RadarConfig{}, 11);
    ModelConfig mc;
    mc.levels = 1;
    mc.channel_divisor = 8;
    UNetModel model = build_model(mc, 3);
    model.norm_stats = fit_norm_stats(train_set);

    // Snap every trainable tensor to its own quantization grid first.
    for (ParamRef& r : param_refs(model)) {
        if (!r.trainable) continue;
        std::span<const float> vals(r.data, r.size);
        QuantParams qp = quant_params_for(vals);
        std::vector<std::uint8_t> q = quantize_values(vals, qp);
        std::vector<float> back = dequantize_values(q, qp);
        std::copy(back.begin(), back.end(), r.data);
    }
    QuantizedModel qm = quantize_model(model, val_set);
    UNetModel deq = dequantize_model(qm);
    std::vector<ParamRef> ra = param_refs(model), rb = param_refs(deq);
    REQUIRE(ra.size() == rb.size());
    for (std::size_t i = 0; i < ra.size(); ++i)
        for (std::size_t j = 0; j < ra[i].size; ++j)
            CHECK(std::abs(ra[i].data[j] - rb[i].data[j]) <= 1e-5f);
}

TEST_CASE("quantized forward stays finite even with absurdly wide ranges") {
    scene::SceneConfig sc;
    sc.height = 16;
    sc.width = 16;
    auto [train_set, val_set] = scene::generate_set(12, sc, scene::RadarConfig{}, 13);
    ModelConfig mc;
    mc.levels = 1;
    mc.channel_divisor = 8;
    UNetModel model = build_model(mc, 4);
    model.norm_stats = fit_norm_stats(train_set);
    QuantizedModel qm = quantize_model(model, val_set);
    for (auto& [site, range] : qm.act_ranges) {
        range.lo = -1e30f;
        range.hi = 1e30f;
    }
    Tensor x = normalize_input(val_set.cubes[0], model.norm_stats);
    Tensor logits = quantized_forward(qm, x);
    CHECK(logits.all_finite());
}

TEST_CASE("quantized and float mIoU agree on a lightly trained model") {
    scene::SceneConfig sc;
    sc.height = 16;
    sc.width = 16;
    auto [train_set, val_set] = scene::generate_set(24, sc, scene::RadarConfig{}, 15);
    ModelConfig mc;
    mc.levels = 2;
    mc.channel_divisor = 4;
    UNetModel model = build_model(mc, 0);
    TrainConfig tc;
    tc.epochs = 4;
    tc.batch_size = 8;
    tc.seed = 0;
    train(model, train_set, val_set, tc);

    const double f = evaluate_miou(model, val_set);
    QuantizedModel qm = quantize_model(model, val_set);
    const double q = evaluate_miou_quantized(qm, val_set);
    CHECK(std::abs(f - q) <= 0.03);
}
