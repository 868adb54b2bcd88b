// Acceptance harness: one pass/fail line per top-level criterion.
// Exits 0 iff every criterion passes.

#include <array>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "test_support.hpp"
#include "tinyunet/bench.hpp"
#include "tinyunet/dataset.hpp"
#include "tinyunet/kernels.hpp"
#include "tinyunet/metrics.hpp"
#include "tinyunet/quantize.hpp"
#include "tinyunet/scenegen.hpp"
#include "tinyunet/serialize.hpp"
#include "tinyunet/trainer.hpp"
#include "tinyunet/unet.hpp"

namespace fs = std::filesystem;
using namespace tinyunet;
using testsup::central_diff;
using testsup::central_diff_d;
using testsup::conv_fwd_d;
using testsup::conv_oracle;
using testsup::dot;
using testsup::DTensor;
using testsup::random_tensor;
using testsup::rel_err;
using testsup::tconv_fwd_d;
using testsup::tconv_oracle;
using testsup::to_double;

namespace {

int g_failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
    std::printf("[%s] %s — %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

struct RunResult {
    int exit_code = -1;
    std::string output;
};

RunResult run_cli(const std::string& args) {
    const std::string cmd = std::string(TINYUNET_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    RunResult r;
    if (!pipe) return r;
    std::array<char, 4096> buf;
    while (fgets(buf.data(), buf.size(), pipe)) r.output += buf.data();
    const int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::vector<char> slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

const fs::path& scratch() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "tinyunet_acceptance";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ModelConfig make_cfg(int b, int f) {
    ModelConfig c;
    c.levels = b;
    c.channel_divisor = f;
    return c;
}

// The default training corpus: 80 scenes -> 72 train / 8 validation.
struct DefaultData {
    scene::SceneSet train, val;
};

const DefaultData& default_data() {
    static const DefaultData d = [] {
        DefaultData out;
        scene::SceneConfig sc;
        scene::RadarConfig rc;
        std::tie(out.train, out.val) = scene::generate_set(80, sc, rc, 42);
        return out;
    }();
    return d;
}

// ---------------------------------------------------------------------------
// 1. Size table
// ---------------------------------------------------------------------------

struct SizeRow {
    int b, f;
    double size_mib;
};

constexpr SizeRow kPublishedSizes[] = {
    {4, 1, 29.62}, {4, 2, 7.41}, {4, 4, 1.86}, {4, 8, 0.47},  {4, 16, 0.12},
    {3, 1, 7.35},  {3, 2, 1.84}, {3, 4, 0.46}, {3, 8, 0.12},  {3, 16, 0.03},
    {2, 1, 1.78},  {2, 2, 0.45}, {2, 4, 0.11}, {2, 8, 0.03},  {2, 16, 0.01},
    {1, 1, 0.39},  {1, 2, 0.10}, {1, 4, 0.03}, {1, 8, 0.01},  {1, 16, 0.002},
};

void criterion_size_table() {
    const auto t0 = std::chrono::steady_clock::now();
    RunResult r = run_cli("size-table");
    const double secs = seconds_since(t0);

    // Parse "B,F,params,MiB" rows out of the CSV body.
    std::map<std::pair<int, int>, double> got;
    std::istringstream in(r.output);
    std::string line;
    while (std::getline(in, line)) {
        int b = 0, f = 0;
        long long params = 0;
        double mib = 0.0;
        if (std::sscanf(line.c_str(), "%d,%d,%lld,%lf", &b, &f, &params, &mib) == 4) got[{b, f}] = mib;
    }

    int matched = 0;
    std::string worst;
    for (const SizeRow& row : kPublishedSizes) {
        const auto it = got.find({row.b, row.f});
        const double tol = row.size_mib < 0.005 ? 0.0005 : 0.01;
        // The CSV rounds to the published grid, so a diff can land exactly on
        // the tolerance boundary; allow for binary representation of 0.01.
        if (it != got.end() && std::abs(it->second - row.size_mib) <= tol + 1e-9) {
            ++matched;
        } else if (worst.empty()) {
            worst = " first mismatch B=" + std::to_string(row.b) + " F=" + std::to_string(row.f);
        }
    }
    const bool ok = r.exit_code == 0 && matched == 20 && secs < 1.0;
    std::ostringstream d;
    d << "size-table matched " << matched << "/20 published MiB values in " << secs << " s" << worst;
    report("size-table reproduction", ok, d.str());
}

// ---------------------------------------------------------------------------
// 2. Compression ratio
// ---------------------------------------------------------------------------

void criterion_compression_ratio() {
    // Ratio of the table-rounded sizes, as published.
    const double big = std::round(model_size_mib(make_cfg(4, 1)) * 100.0) / 100.0;
    const double small = std::round(model_size_mib(make_cfg(2, 4)) * 100.0) / 100.0;
    const double ratio = big / small;
    std::ostringstream d;
    d << "size(B=4,F=1)/size(B=2,F=4) = " << ratio << " (want within [268, 271])";
    report("compression ratio ~269x", ratio >= 268.0 && ratio <= 271.0, d.str());
}

// ---------------------------------------------------------------------------
// 3. Kernel correctness
// ---------------------------------------------------------------------------

void criterion_kernels() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> dim(2, 6), chan(1, 4);
    int cases = 0, bad = 0;
    double worst_fwd = 0.0, worst_bwd = 0.0;

    auto note_fwd = [&](double err, double tol) {
        ++cases;
        worst_fwd = std::max(worst_fwd, err);
        if (err > tol) ++bad;
    };
    auto note_bwd = [&](double err) {
        worst_bwd = std::max(worst_bwd, err);
        if (err > 1e-3) ++bad;
    };

    // Forward: conv3x3 / conv1x1 vs the nested-loop oracle.
    for (int rep = 0; rep < 30; ++rep) {
        const int c = chan(rng), oc = chan(rng), h = 2 * dim(rng), w = 2 * dim(rng);
        const int k = rep % 2 == 0 ? 3 : 1;
        Tensor input = random_tensor(1, c, h, w, rng);
        Tensor wts = random_tensor(oc, c, k, k, rng);
        Tensor got = ops::conv2d_forward(input, wts, {});
        Tensor want = conv_oracle(input, wts, {}, k == 3 ? 1 : 0);
        note_fwd(testsup::max_abs_diff(got, want), 1e-5);
    }

    // Forward: transpose conv vs the scatter oracle.
    for (int rep = 0; rep < 15; ++rep) {
        const int c = chan(rng), oc = chan(rng), h = dim(rng), w = dim(rng);
        Tensor input = random_tensor(1, c, h, w, rng);
        Tensor wts = random_tensor(c, oc, 2, 2, rng);
        std::vector<float> bias(oc, 0.25f);
        Tensor got = ops::transpose_conv2x2(input, wts, bias);
        Tensor want = tconv_oracle(input, wts, bias);
        note_fwd(testsup::max_abs_diff(got, want), 1e-5);
    }

    // Forward: batchnorm (train mode) vs the two-pass double oracle.
    for (int rep = 0; rep < 15; ++rep) {
        const int c = chan(rng), h = 2 * dim(rng), w = 2 * dim(rng);
        Tensor input = random_tensor(2, c, h, w, rng);
        std::vector<float> gamma(c, 1.2f), beta(c, -0.1f), rm(c, 0.0f), rv(c, 1.0f);
        Tensor got = ops::batchnorm_forward(input, gamma, beta, rm, rv, ops::BatchNormMode::train, 0.1f, 1e-5f);
        DTensor din = to_double(input);
        DTensor want = testsup::bn_train_fwd_d(din, std::vector<double>(c, 1.2), std::vector<double>(c, -0.1), 1e-5);
        double err = 0.0;
        for (std::size_t i = 0; i < got.size(); ++i) err = std::max(err, std::abs(got.data[i] - want.v[i]));
        note_fwd(err, 1e-5);
    }

    // Forward: softmax vs the double oracle.
    for (int rep = 0; rep < 10; ++rep) {
        Tensor input = random_tensor(1, 11, dim(rng), dim(rng), rng, -4.0f, 4.0f);
        Tensor got = ops::softmax_channels(input);
        DTensor want = testsup::softmax_d(to_double(input));
        double err = 0.0;
        for (std::size_t i = 0; i < got.size(); ++i) err = std::max(err, std::abs(got.data[i] - want.v[i]));
        note_fwd(err, 1e-5);
    }

    // Backward: conv vs central finite differences of the 64-bit forward oracle.
    for (int rep = 0; rep < 15; ++rep) {
        const int c = chan(rng), oc = chan(rng), h = dim(rng), w = dim(rng);
        Tensor input = random_tensor(1, c, h, w, rng);
        Tensor wts = random_tensor(oc, c, 3, 3, rng);
        Tensor d_out = random_tensor(1, oc, h, w, rng);
        ops::LayerGrad g = ops::conv2d_backward(input, wts, d_out);
        DTensor din = to_double(input), dw = to_double(wts);
        auto loss = [&] { return dot(conv_fwd_d(din, dw, {}, 1), d_out); };
        std::uniform_int_distribution<std::size_t> wi(0, wts.size() - 1), ii(0, input.size() - 1);
        ++cases;
        for (int probe = 0; probe < 4; ++probe) {
            const std::size_t a = wi(rng);
            note_bwd(rel_err(g.d_weights.data[a], central_diff_d(dw.v[a], loss)));
            const std::size_t b = ii(rng);
            note_bwd(rel_err(g.d_input.data[b], central_diff_d(din.v[b], loss)));
        }
    }

    // Backward: transpose conv vs finite differences.
    for (int rep = 0; rep < 10; ++rep) {
        const int c = chan(rng), oc = chan(rng), h = dim(rng), w = dim(rng);
        Tensor input = random_tensor(1, c, h, w, rng);
        Tensor wts = random_tensor(c, oc, 2, 2, rng);
        std::vector<float> bias(oc, 0.1f);
        Tensor d_out = random_tensor(1, oc, 2 * h, 2 * w, rng);
        ops::LayerGrad g = ops::transpose_conv2x2_backward(input, wts, d_out);
        DTensor din = to_double(input), dw = to_double(wts);
        std::vector<double> dbias(bias.begin(), bias.end());
        auto loss = [&] { return dot(tconv_fwd_d(din, dw, dbias), d_out); };
        std::uniform_int_distribution<std::size_t> wi(0, wts.size() - 1), ii(0, input.size() - 1);
        ++cases;
        for (int probe = 0; probe < 4; ++probe) {
            const std::size_t a = wi(rng), b = ii(rng);
            note_bwd(rel_err(g.d_weights.data[a], central_diff_d(dw.v[a], loss)));
            note_bwd(rel_err(g.d_input.data[b], central_diff_d(din.v[b], loss)));
        }
        note_bwd(rel_err(g.d_bias[0], central_diff_d(dbias[0], loss)));
    }

    // Backward: batchnorm (train statistics participate) vs finite differences.
    for (int rep = 0; rep < 10; ++rep) {
        const int c = chan(rng), h = dim(rng), w = dim(rng);
        Tensor input = random_tensor(2, c, h, w, rng);
        std::vector<float> gamma(c, 0.9f), beta(c, 0.2f), rm(c, 0.0f), rv(c, 1.0f);
        Tensor d_out = random_tensor(2, c, h, w, rng);
        ops::BatchNormCache cache;
        ops::batchnorm_forward(input, gamma, beta, rm, rv, ops::BatchNormMode::train, 0.1f, 1e-5f, &cache);
        ops::BatchNormGrad g = ops::batchnorm_backward(input, gamma, cache, d_out);
        DTensor din = to_double(input);
        std::vector<double> dgamma(c, 0.9), dbeta(c, 0.2);
        auto loss = [&] { return dot(testsup::bn_train_fwd_d(din, dgamma, dbeta, 1e-5), d_out); };
        std::uniform_int_distribution<std::size_t> ii(0, input.size() - 1);
        ++cases;
        for (int probe = 0; probe < 4; ++probe) {
            const std::size_t a = ii(rng);
            note_bwd(rel_err(g.d_input.data[a], central_diff_d(din.v[a], loss)));
        }
        note_bwd(rel_err(g.d_gamma[0], central_diff_d(dgamma[0], loss)));
        note_bwd(rel_err(g.d_beta[0], central_diff_d(dbeta[0], loss)));
    }

    // Backward: softmax vs finite differences.
    for (int rep = 0; rep < 5; ++rep) {
        Tensor input = random_tensor(1, 11, 2, 2, rng, -2.0f, 2.0f);
        Tensor d_out = random_tensor(1, 11, 2, 2, rng);
        Tensor sm = ops::softmax_channels(input);
        Tensor g = ops::softmax_channels_backward(sm, d_out);
        DTensor din = to_double(input);
        auto loss = [&] { return dot(testsup::softmax_d(din), d_out); };
        std::uniform_int_distribution<std::size_t> ii(0, input.size() - 1);
        ++cases;
        for (int probe = 0; probe < 6; ++probe) {
            const std::size_t a = ii(rng);
            note_bwd(rel_err(g.data[a], central_diff_d(din.v[a], loss)));
        }
    }

    // Full-network gradient check on (B=1, F=16): batch statistics, pooling
    // argmax routing, skip concatenation and the head all participate.
    bool full_ok = false;
    double full_rel = 0.0;
    int full_probes = 0;
    {
        UNetModel m = build_model(make_cfg(1, 16), 11);
        // Check at a generic point: the fresh model's zero-initialized head
        // blocks gradient flow into the body, so perturb every parameter.
        std::uniform_real_distribution<float> jitter(-0.5f, 0.5f);
        for (ParamRef& ref : param_refs(m))
            if (ref.trainable)
                for (std::size_t i = 0; i < ref.size; ++i) ref.data[i] += jitter(rng);
        Tensor in = random_tensor(1, 9, 8, 8, rng);
        ClassMap labels(1, 8, 8);
        std::uniform_int_distribution<int> cls(0, 10);
        for (auto& v : labels.data) v = static_cast<std::uint8_t>(cls(rng));

        auto loss_value = [&] {
            Tensor logits = forward(m, in, ops::BatchNormMode::train);
            return cross_entropy_loss(logits, labels).first;
        };
        ForwardTrace trace;
        Tensor logits = forward(m, in, ops::BatchNormMode::train, &trace);
        auto [loss, d_logits] = cross_entropy_loss(logits, labels);
        GradStore g = backward(m, trace, d_logits);

        // Probe the largest-magnitude gradient entry per tensor; tiny entries
        // drown in f32 forward noise under finite differences.
        int probes = 0;
        double num = 0.0, den = 0.0;
        for (ParamRef& ref : param_refs(m)) {
            if (!ref.trainable) continue;
            const std::vector<float>& gv = g.at(ref.name);
            std::size_t best = 0;
            for (std::size_t i = 1; i < ref.size; ++i)
                if (std::abs(gv[i]) > std::abs(gv[best])) best = i;
            if (std::abs(gv[best]) < 1e-3) continue;
            const double fd = central_diff(ref.data[best], loss_value);
            num += (gv[best] - fd) * (gv[best] - fd);
            den += fd * fd;
            ++probes;
        }
        full_rel = den > 0.0 ? std::sqrt(num / den) : 1.0;
        full_probes = probes;
        full_ok = probes >= 8 && full_rel <= 1e-3;
    }

    const double secs = seconds_since(t0);
    const bool ok = bad == 0 && cases >= 100 && full_ok && secs < 120.0;
    std::ostringstream d;
    d << cases << " randomized cases, worst fwd abs " << worst_fwd << ", worst bwd rel " << worst_bwd
      << ", full-net rel " << full_rel << " (" << full_probes << " probes), " << secs << " s";
    report("kernel correctness", ok, d.str());
}

// ---------------------------------------------------------------------------
// 4. Metrics oracle
// ---------------------------------------------------------------------------

void criterion_metrics() {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> cls(0, kNumClasses - 1), few(0, 3);
    int exact = 0, dice_ok = 0;
    const int pairs = 1000;
    for (int rep = 0; rep < pairs; ++rep) {
        ClassMap pred(1, 8, 8), truth(1, 8, 8);
        // Half the pairs draw from a restricted class range so some classes
        // are absent and the exclusion rule is exercised.
        const bool sparse = rep % 2 == 0;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            pred.data[i] = static_cast<std::uint8_t>(sparse ? few(rng) : cls(rng));
            truth.data[i] = static_cast<std::uint8_t>(sparse ? few(rng) : cls(rng));
        }

        // Brute-force per-pixel one-vs-rest counting, independent of `confusion`.
        std::array<std::int64_t, kNumClasses> tp{}, fp{}, fn{}, tn{};
        for (int k = 0; k < kNumClasses; ++k)
            for (std::size_t i = 0; i < pred.size(); ++i) {
                const bool p = pred.data[i] == k, t = truth.data[i] == k;
                if (p && t) ++tp[k];
                else if (p) ++fp[k];
                else if (t) ++fn[k];
                else ++tn[k];
            }

        ConfusionCounts c = confusion(pred, truth);
        MetricsReport r = compute_metrics(c);

        bool same = true;
        int used = 0;
        double siou = 0, sdice = 0, sprec = 0, srec = 0;
        bool identity = true;
        for (int k = 0; k < kNumClasses; ++k) {
            same &= c.tp[k] == tp[k] && c.fp[k] == fp[k] && c.fn[k] == fn[k] && c.tn[k] == tn[k];
            if (tp[k] + fp[k] + fn[k] == 0) continue;
            const auto div = [](std::int64_t n, std::int64_t d) { return d == 0 ? 0.0 : double(n) / double(d); };
            const double iou = div(tp[k], tp[k] + fp[k] + fn[k]);
            const double dice = div(2 * tp[k], 2 * tp[k] + fp[k] + fn[k]);
            same &= r.iou[k] == iou && r.dice[k] == dice;
            same &= r.precision[k] == div(tp[k], tp[k] + fp[k]) && r.recall[k] == div(tp[k], tp[k] + fn[k]);
            identity &= std::abs(r.dice[k] - 2.0 * r.iou[k] / (1.0 + r.iou[k])) <= 1e-12;
            siou += iou;
            sdice += dice;
            sprec += div(tp[k], tp[k] + fp[k]);
            srec += div(tp[k], tp[k] + fn[k]);
            ++used;
        }
        same &= r.mean_iou == siou / used && r.mean_dice == sdice / used;
        same &= r.mean_precision == sprec / used && r.mean_recall == srec / used;
        if (same) ++exact;
        if (identity) ++dice_ok;
    }
    std::ostringstream d;
    d << exact << "/" << pairs << " pairs exact vs brute-force oracle, Dice=2IoU/(1+IoU) on " << dice_ok << "/"
      << pairs;
    report("metrics oracle", exact == pairs && dice_ok == pairs, d.str());
}

// ---------------------------------------------------------------------------
// 5. Quantization fidelity
// ---------------------------------------------------------------------------

void criterion_quantization() {
    const DefaultData& data = default_data();
    UNetModel model = build_model(make_cfg(2, 4), 0);
    TrainConfig tc;  // pinned defaults: 10 epochs, batch 16, lr 8e-4, Adam
    tc.seed = 0;
    train(model, data.train, data.val, tc);

    const double float_miou = evaluate_miou(model, data.val);
    QuantizedModel q = quantize_model(model, data.val);  // validation split calibrates
    const double quant_miou = evaluate_miou_quantized(q, data.val);
    const bool close = std::abs(quant_miou - float_miou) <= 0.03;

    // Quantize->dequantize error bounded by half a grid step on every weight.
    bool halfstep = true;
    for (const QuantizedTensor& qt : q.tensors) {
        const std::vector<float> deq = dequantize_values(qt.payload, qt.qp);
        // Locate the source tensor by name for the element-wise comparison.
        for (ParamRef& ref : param_refs(model)) {
            if (ref.name != qt.name) continue;
            for (std::size_t i = 0; i < ref.size; ++i)
                halfstep &= std::abs(deq[i] - ref.data[i]) <= qt.qp.scale / 2.0f + 1e-7f;
        }
    }

    // Round-trip idempotence over the full 8-bit code space.
    QuantParams qp{0.013f, 97};
    std::vector<std::uint8_t> codes(256);
    for (int i = 0; i < 256; ++i) codes[i] = static_cast<std::uint8_t>(i);
    const std::vector<float> vals = dequantize_values(codes, qp);
    const std::vector<std::uint8_t> back = quantize_values(vals, qp);
    const bool idempotent = back == codes;

    std::ostringstream d;
    d << "float mIoU " << float_miou << ", quantized mIoU " << quant_miou << " (|diff| <= 0.03: " << close
      << "), half-step bound " << halfstep << ", 256-point round trip " << idempotent;
    report("quantization fidelity", close && halfstep && idempotent, d.str());
}

// ---------------------------------------------------------------------------
// 6. Desk-scale learnability
// ---------------------------------------------------------------------------

void criterion_learnability() {
    const auto t0 = std::chrono::steady_clock::now();
    const DefaultData& data = default_data();

    // Majority-class baseline: predict the most frequent training class everywhere.
    std::array<std::int64_t, kNumClasses> hist{};
    for (const ClassMap& m : data.train.labels)
        for (const std::uint8_t v : m.data) ++hist[v];
    int majority = 0;
    for (int k = 1; k < kNumClasses; ++k)
        if (hist[k] > hist[majority]) majority = k;
    ConfusionCounts base;
    for (const ClassMap& truth : data.val.labels) {
        ClassMap constant(truth.n, truth.h, truth.w);
        std::fill(constant.data.begin(), constant.data.end(), static_cast<std::uint8_t>(majority));
        base += confusion(constant, truth);
    }
    const double majority_miou = compute_metrics(base).mean_iou;

    int passing = 0;
    std::ostringstream seeds;
    for (std::uint64_t seed : {0, 1, 2, 3, 4}) {
        UNetModel model = build_model(make_cfg(2, 4), seed);
        TrainConfig tc;  // pinned: 10 epochs, batch 16, lr 8e-4
        tc.seed = seed;
        train(model, data.train, data.val, tc);
        const double miou = evaluate_miou(model, data.val);
        if (miou >= 0.60 && miou > majority_miou) ++passing;
        seeds << (seed ? " " : "") << miou;
    }
    const double secs = seconds_since(t0);
    const bool ok = passing >= 4 && secs < 600.0;
    std::ostringstream d;
    d << passing << "/5 seeds reach val mIoU >= 0.60 (values: " << seeds.str() << "; majority baseline "
      << majority_miou << ") in " << secs << " s";
    report("desk-scale learnability", ok, d.str());
}

// ---------------------------------------------------------------------------
// 7. Determinism
// ---------------------------------------------------------------------------

void criterion_determinism() {
    const fs::path dir = scratch();
    const fs::path data = dir / "det_data";
    RunResult g = run_cli("gen-data --out " + data.string() + " --count 10 --height 16 --width 16 --seed 9");
    bool ok = g.exit_code == 0;

    std::array<std::string, 2> evals;
    std::array<std::vector<char>, 2> models;
    for (int run = 0; run < 2 && ok; ++run) {
        const fs::path model = dir / ("det_model_" + std::to_string(run) + ".tunw");
        RunResult t = run_cli("train --data " + data.string() + " -B 1 -F 16 --epochs 2 --batch-size 4 --seed 5 --out " +
                              model.string() + " --report " + (dir / "det_report.csv").string());
        RunResult e = run_cli("eval --model " + model.string() + " --data " + data.string());
        ok = ok && t.exit_code == 0 && e.exit_code == 0;
        models[run] = slurp(model);
        evals[run] = e.output;
    }
    const bool model_same = ok && !models[0].empty() && models[0] == models[1];
    const bool eval_same = ok && evals[0] == evals[1];
    std::ostringstream d;
    d << "repeat train+eval: model files byte-identical " << model_same << ", metric JSON identical " << eval_same;
    report("determinism", model_same && eval_same, d.str());
}

// ---------------------------------------------------------------------------
// 8. Benchmark sanity
// ---------------------------------------------------------------------------

void criterion_bench() {
    BenchConfig bc;
    bc.runs = 30;
    bc.height = 16;
    bc.width = 16;

    UNetModel big = build_model(make_cfg(4, 1), 1);
    UNetModel small = build_model(make_cfg(2, 4), 1);
    big.norm_stats = NormStats{std::vector<float>(9, 0.0f), std::vector<float>(9, 1.0f)};
    small.norm_stats = big.norm_stats;

    BenchReport rb = bench_float(big, bc);
    BenchReport rs = bench_float(small, bc);

    const double mac_ratio =
        static_cast<double>(rb.macs_per_inference) / static_cast<double>(rs.macs_per_inference);
    const bool macs_ok = mac_ratio >= 50.0;
    const bool latency_ok = rs.median_ms < rb.median_ms;

    bool schema_ok = true;
    try {
        nlohmann::json j = nlohmann::json::parse(rs.to_json());
        for (const char* key : {"config", "input", "quantized", "runs", "warmup", "mean_ms", "median_ms", "p95_ms",
                                "macs_per_inference", "host"})
            schema_ok &= j.contains(key);
        schema_ok &= j["config"].contains("B") && j["config"].contains("F");
        schema_ok &= j["median_ms"].get<double>() > 0.0 && j["macs_per_inference"].get<std::int64_t>() > 0;
    } catch (...) {
        schema_ok = false;
    }

    std::ostringstream d;
    d << "MAC ratio (4,1)/(2,4) = " << mac_ratio << " (>= 50: " << macs_ok << "), median " << rs.median_ms
      << " ms vs " << rb.median_ms << " ms (smaller is faster: " << latency_ok << "), schema " << schema_ok;
    report("benchmark sanity", macs_ok && latency_ok && schema_ok, d.str());
}

// ---------------------------------------------------------------------------
// 9. Surrogate integrity
// ---------------------------------------------------------------------------

void criterion_surrogate() {
    scene::SceneConfig cfg;  // noise enters per-pixel generation only, not signatures
    scene::RadarConfig radar;

    std::vector<std::vector<double>> sig(kNumClasses);
    for (int k = 0; k < kNumClasses; ++k) sig[k] = scene::class_signature(k, cfg, radar);
    double min_gap = 1e300;
    for (int a = 0; a < kNumClasses; ++a)
        for (int b = a + 1; b < kNumClasses; ++b) {
            double gap = 0.0;
            for (std::size_t ch = 0; ch < sig[a].size(); ++ch) gap = std::max(gap, std::abs(sig[a][ch] - sig[b][ch]));
            min_gap = std::min(min_gap, gap);
        }
    const bool distinct = min_gap > 1e-6;

    // d = 0: the slick vanishes and the stack must reduce to the bare-water
    // Fresnel reflectance, computed here with independent complex arithmetic.
    double worst = 0.0;
    const std::complex<double> eps_oil(cfg.oil_rel_permittivity, -cfg.oil_rel_permittivity * cfg.oil_loss_tangent);
    for (const double f : radar.frequencies_ghz) {
        const std::complex<double> eps_w = scene::water_permittivity(f, cfg.water_temp_c, cfg.salinity_ppt);
        const std::complex<double> n_w = std::sqrt(std::conj(eps_w));  // decay convention: negative imaginary part
        const std::complex<double> r = (1.0 - n_w) / (1.0 + n_w);
        const double fresnel = std::norm(r);
        worst = std::max(worst, std::abs(scene::layered_reflectance(0.0, f, eps_oil, eps_w) - fresnel));
    }
    const bool fresnel_ok = worst <= 1e-10;

    std::ostringstream d;
    d << "min pairwise signature gap " << min_gap << " (> 0: " << distinct << "), worst |R(d=0) - Fresnel| = "
      << worst << " (<= 1e-10: " << fresnel_ok << ")";
    report("surrogate integrity", distinct && fresnel_ok, d.str());
}

}  // namespace

int main() {
    criterion_size_table();
    criterion_compression_ratio();
    criterion_kernels();
    criterion_metrics();
    criterion_quantization();
    criterion_learnability();
    criterion_determinism();
    criterion_bench();
    criterion_surrogate();
    std::printf("%d/9 criteria passed\n", 9 - g_failures);
    return g_failures == 0 ? 0 : 1;
}
