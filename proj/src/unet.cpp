#include "tinyunet/unet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace tinyunet {

using ops::BatchNormMode;

namespace {

constexpr float kBnMomentum = 0.1f;
constexpr float kBnEps = 1e-5f;

void fake_quant_inplace(Tensor& t, const QuantRange& r) {
    // Mirrors quantize_tensor's affine grid; infinite ranges are clamped so
    // the result stays finite.
    const float big = std::numeric_limits<float>::max() / 4.0f;
    const double lo = std::clamp(std::min(r.lo, 0.0f), -big, big);
    const double hi = std::clamp(std::max(r.hi, 0.0f), -big, big);
    double scale = (hi - lo) / 255.0;
    if (!(scale > 0.0)) scale = 1.0;
    const double zp = std::clamp(std::round(-lo / scale), 0.0, 255.0);
    for (float& v : t.data) {
        const double q = std::clamp(std::round(v / scale) + zp, 0.0, 255.0);
        v = static_cast<float>((q - zp) * scale);
    }
}

void apply_site(Tensor& t, const std::string& site, QuantContext* quant) {
    if (!quant || !quant->ranges) return;
    if (quant->mode == QuantContext::Mode::calibrate) {
        float lo = t.data[0], hi = t.data[0];
        for (float v : t.data) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        auto it = quant->ranges->find(site);
        if (it == quant->ranges->end()) {
            (*quant->ranges)[site] = {lo, hi};
        } else {
            it->second.lo = std::min(it->second.lo, lo);
            it->second.hi = std::max(it->second.hi, hi);
        }
    } else {
        auto it = quant->ranges->find(site);
        if (it == quant->ranges->end()) fail_data("quantized forward: no calibration range for site " + site);
        if (it->second.lo > it->second.hi) return;  // inverted range marks a float (pass-through) site
        fake_quant_inplace(t, it->second);
    }
}

Tensor run_conv_bn_relu(ConvBnParams& p, const Tensor& x, BatchNormMode mode, ConvBnTrace* trace,
                        QuantContext* quant, const std::string& site) {
    Tensor conv_out = ops::conv2d_forward(x, p.w, {});
    ops::BatchNormCache cache;
    Tensor bn_out = ops::batchnorm_forward(conv_out, p.gamma, p.beta, p.run_mean, p.run_var, mode, kBnMomentum,
                                           kBnEps, trace ? &cache : nullptr);
    apply_site(bn_out, site, quant);
    Tensor out = ops::relu(bn_out);
    if (trace) {
        trace->conv_in = x;
        trace->conv_out = std::move(conv_out);
        trace->bn_cache = std::move(cache);
        trace->bn_out = bn_out;
        trace->relu_out = out;
    }
    return out;
}

Tensor run_block(BlockParams& p, const Tensor& x, BatchNormMode mode, BlockTrace* trace, QuantContext* quant,
                 const std::string& prefix) {
    Tensor y = run_conv_bn_relu(p.c1, x, mode, trace ? &trace->c1 : nullptr, quant, prefix + ".c1");
    return run_conv_bn_relu(p.c2, y, mode, trace ? &trace->c2 : nullptr, quant, prefix + ".c2");
}

// d_out is the gradient at the block's ReLU output; returns gradient at the block input.
Tensor block_backward(const BlockParams& p, const BlockTrace& trace, const Tensor& d_out, GradStore& store,
                      const std::string& prefix) {
    Tensor d = ops::relu_backward(trace.c2.bn_out, d_out);
    ops::BatchNormGrad bg2 = ops::batchnorm_backward(trace.c2.conv_out, p.c2.gamma, trace.c2.bn_cache, d);
    store.add(prefix + ".c2.gamma", bg2.d_gamma.data(), bg2.d_gamma.size());
    store.add(prefix + ".c2.beta", bg2.d_beta.data(), bg2.d_beta.size());
    ops::LayerGrad cg2 = ops::conv2d_backward(trace.c2.conv_in, p.c2.w, bg2.d_input);
    store.add(prefix + ".c2.w", cg2.d_weights.data.data(), cg2.d_weights.size());

    d = ops::relu_backward(trace.c1.bn_out, cg2.d_input);
    ops::BatchNormGrad bg1 = ops::batchnorm_backward(trace.c1.conv_out, p.c1.gamma, trace.c1.bn_cache, d);
    store.add(prefix + ".c1.gamma", bg1.d_gamma.data(), bg1.d_gamma.size());
    store.add(prefix + ".c1.beta", bg1.d_beta.data(), bg1.d_beta.size());
    ops::LayerGrad cg1 = ops::conv2d_backward(trace.c1.conv_in, p.c1.w, bg1.d_input);
    store.add(prefix + ".c1.w", cg1.d_weights.data.data(), cg1.d_weights.size());
    return std::move(cg1.d_input);
}

// Dirac-style initialization: a cyclic center-tap identity plus a shrunk
// Kaiming-uniform perturbation. The identity component carries the input
// spectral channels through the depth unmutilated, so the narrow compressed
// configurations start from informative features instead of random
// projections — which matters under a short optimization budget. The tap
// sign alternates across output channels (CReLU-style): each conv sits in
// front of a zero-mean batchnorm + ReLU, so a single-sign identity would
// discard every feature whose normalized value is negative, and inputs that
// sit below the channel mean everywhere would become indistinguishable.
// With alternating signs each feature survives the ReLU on about half of
// the channels regardless of its sign. Batchnorm renormalizes every block,
// so neither component distorts the forward scale.
constexpr double kInitScale = 0.02;

ConvBnParams make_conv_bn(int in_c, int out_c, std::mt19937_64& rng) {
    ConvBnParams p;
    p.w = Tensor(out_c, in_c, 3, 3);
    const double bound = kInitScale * std::sqrt(6.0 / (static_cast<double>(in_c) * 9.0));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (float& v : p.w.data) v = static_cast<float>(dist(rng));
    for (int o = 0; o < out_c; ++o) {
        // Widening layers pair each input with one + tap and one − tap;
        // same-width layers alternate the sign by channel parity.
        const float sign = out_c > in_c ? (o < in_c ? 1.0f : -1.0f) : (o % 2 == 0 ? 1.0f : -1.0f);
        p.w.at(o, o % in_c, 1, 1) += sign;
    }
    p.gamma.assign(out_c, 1.0f);
    p.beta.assign(out_c, 0.0f);
    p.run_mean.assign(out_c, 0.0f);
    p.run_var.assign(out_c, 1.0f);
    return p;
}

void param_refs_conv_bn(ConvBnParams& p, const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".w", p.w.data.data(), p.w.size(), {p.w.n, p.w.c, p.w.h, p.w.w}, true});
    out.push_back({prefix + ".gamma", p.gamma.data(), p.gamma.size(), {}, true});
    out.push_back({prefix + ".beta", p.beta.data(), p.beta.size(), {}, true});
    out.push_back({prefix + ".run_mean", p.run_mean.data(), p.run_mean.size(), {}, false});
    out.push_back({prefix + ".run_var", p.run_var.data(), p.run_var.size(), {}, false});
}

}  // namespace

void ModelConfig::validate() const {
    if (levels < 1 || levels > 4) fail_config("B must be in 1..4, got " + std::to_string(levels));
    if (channel_divisor != 1 && channel_divisor != 2 && channel_divisor != 4 && channel_divisor != 8 &&
        channel_divisor != 16) {
        fail_config("F must be one of {1,2,4,8,16}, got " + std::to_string(channel_divisor));
    }
    if (base_width % channel_divisor != 0 || base_width / channel_divisor < 1) {
        fail_config("base width " + std::to_string(base_width) + " not divisible by F=" +
                    std::to_string(channel_divisor));
    }
    if (in_channels < 1 || num_classes < 2) fail_config("bad channel/class configuration");
}

ChannelSchedule channel_schedule(const ModelConfig& cfg) {
    cfg.validate();
    ChannelSchedule s;
    for (int i = 0; i < cfg.levels; ++i) s.encoder.push_back(cfg.base_width * (1 << i) / cfg.channel_divisor);
    s.bottleneck = cfg.base_width * (1 << cfg.levels) / cfg.channel_divisor;
    return s;
}

std::int64_t param_count(const ModelConfig& cfg) {
    const ChannelSchedule s = channel_schedule(cfg);
    auto conv_bn = [](std::int64_t in_c, std::int64_t out_c) { return out_c * in_c * 9 + 2 * out_c; };
    std::int64_t count = 0;
    std::int64_t prev = cfg.in_channels;
    for (int w : s.encoder) {
        count += conv_bn(prev, w) + conv_bn(w, w);
        prev = w;
    }
    count += conv_bn(prev, s.bottleneck) + conv_bn(s.bottleneck, s.bottleneck);
    std::int64_t cur = s.bottleneck;
    for (auto it = s.encoder.rbegin(); it != s.encoder.rend(); ++it) {
        const std::int64_t w = *it;
        count += cur * w * 4 + w;  // transpose conv + bias
        count += conv_bn(2 * w, w) + conv_bn(w, w);
        cur = w;
    }
    count += static_cast<std::int64_t>(cfg.num_classes) * s.encoder.front();  // 1x1 head
    return count;
}

double model_size_mib(const ModelConfig& cfg, int bytes_per_param) {
    return static_cast<double>(param_count(cfg)) * bytes_per_param / (1024.0 * 1024.0);
}

std::int64_t mac_count(const ModelConfig& cfg, int h, int w) {
    const ChannelSchedule s = channel_schedule(cfg);
    // Per-pixel kernel cost with every layer charged at the input resolution:
    // a resolution-independent analytic upper bound that, like the size
    // table, depends only on the channel schedule and not on the pooling
    // pyramid, so compression ratios match the parameter accounting.
    auto conv = [](std::int64_t in_c, std::int64_t out_c) { return out_c * in_c * 9; };
    std::int64_t per_pixel = 0;
    std::int64_t prev = cfg.in_channels;
    for (int width : s.encoder) {
        per_pixel += conv(prev, width) + conv(width, width);
        prev = width;
    }
    per_pixel += conv(prev, s.bottleneck) + conv(s.bottleneck, s.bottleneck);
    std::int64_t cur = s.bottleneck;
    for (auto it = s.encoder.rbegin(); it != s.encoder.rend(); ++it) {
        const std::int64_t width = *it;
        per_pixel += cur * width * 4;  // 2x2 transpose conv
        per_pixel += conv(2 * width, width) + conv(width, width);
        cur = width;
    }
    per_pixel += static_cast<std::int64_t>(cfg.num_classes) * s.encoder.front();  // 1x1 head
    return per_pixel * static_cast<std::int64_t>(h) * w;
}

UNetModel build_model(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const ChannelSchedule s = channel_schedule(cfg);
    std::mt19937_64 rng(seed);

    UNetModel m;
    m.config = cfg;
    int prev = cfg.in_channels;
    for (int w : s.encoder) {
        BlockParams b;
        b.c1 = make_conv_bn(prev, w, rng);
        b.c2 = make_conv_bn(w, w, rng);
        m.encoder.push_back(std::move(b));
        prev = w;
    }
    m.bottleneck.c1 = make_conv_bn(prev, s.bottleneck, rng);
    m.bottleneck.c2 = make_conv_bn(s.bottleneck, s.bottleneck, rng);

    int cur = s.bottleneck;
    for (auto it = s.encoder.rbegin(); it != s.encoder.rend(); ++it) {
        const int w = *it;
        DecoderParams d;
        d.up_w = Tensor(cur, w, 2, 2);
        const double bound = kInitScale * std::sqrt(6.0 / (static_cast<double>(cur) * 4.0));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (float& v : d.up_w.data) v = static_cast<float>(dist(rng));
        // Dirac component: nearest-neighbour-style upsampling identity.
        for (int o = 0; o < w; ++o)
            for (int ky = 0; ky < 2; ++ky)
                for (int kx = 0; kx < 2; ++kx) d.up_w.at(o % cur, o, ky, kx) += 1.0f;
        d.up_b.assign(w, 0.0f);
        d.block.c1 = make_conv_bn(2 * w, w, rng);
        d.block.c2 = make_conv_bn(w, w, rng);
        m.decoder.push_back(std::move(d));
        cur = w;
    }

    // Zero-initialized head: logits start at zero (uniform softmax), so the
    // class decision is owned entirely by the learned direction rather than a
    // random projection, which matters under a short optimization budget.
    // The uniform-softmax gradient breaks the symmetry on the first step.
    m.head_w = Tensor(cfg.num_classes, s.encoder.front(), 1, 1);

    m.norm_stats.mean.assign(cfg.in_channels, 0.0f);
    m.norm_stats.stddev.assign(cfg.in_channels, 1.0f);
    return m;
}

std::vector<ParamRef> param_refs(UNetModel& model) {
    std::vector<ParamRef> refs;
    for (std::size_t i = 0; i < model.encoder.size(); ++i) {
        const std::string p = "enc" + std::to_string(i);
        param_refs_conv_bn(model.encoder[i].c1, p + ".c1", refs);
        param_refs_conv_bn(model.encoder[i].c2, p + ".c2", refs);
    }
    param_refs_conv_bn(model.bottleneck.c1, "bottleneck.c1", refs);
    param_refs_conv_bn(model.bottleneck.c2, "bottleneck.c2", refs);
    for (std::size_t i = 0; i < model.decoder.size(); ++i) {
        const std::string p = "dec" + std::to_string(i);
        DecoderParams& d = model.decoder[i];
        refs.push_back({p + ".up.w", d.up_w.data.data(), d.up_w.size(), {d.up_w.n, d.up_w.c, d.up_w.h, d.up_w.w}, true});
        refs.push_back({p + ".up.b", d.up_b.data(), d.up_b.size(), {}, true});
        param_refs_conv_bn(d.block.c1, p + ".c1", refs);
        param_refs_conv_bn(d.block.c2, p + ".c2", refs);
    }
    refs.push_back({"head.w", model.head_w.data.data(), model.head_w.size(),
                    {model.head_w.n, model.head_w.c, model.head_w.h, model.head_w.w}, true});
    return refs;
}

Tensor forward(UNetModel& model, const Tensor& input, BatchNormMode mode, ForwardTrace* trace,
               QuantContext* quant) {
    const ModelConfig& cfg = model.config;
    if (input.c != cfg.in_channels) {
        fail_config("forward: expected " + std::to_string(cfg.in_channels) + " input channels, got " +
                    std::to_string(input.c));
    }
    const int div = 1 << cfg.levels;
    if (input.h % div != 0 || input.w % div != 0) {
        fail_config("forward: spatial dims " + input.shape_str() + " not divisible by 2^B=" + std::to_string(div));
    }

    if (trace) {
        trace->encoder.resize(model.encoder.size());
        trace->pools.resize(model.encoder.size());
        trace->decoder.resize(model.decoder.size());
    }

    Tensor x = input;
    apply_site(x, "input", quant);

    std::vector<Tensor> skips;
    for (std::size_t i = 0; i < model.encoder.size(); ++i) {
        x = run_block(model.encoder[i], x, mode, trace ? &trace->encoder[i] : nullptr, quant,
                      "enc" + std::to_string(i));
        skips.push_back(x);
        ops::PoolResult pr = ops::maxpool2x2(x);
        x = pr.output;
        if (trace) trace->pools[i] = std::move(pr);
    }

    x = run_block(model.bottleneck, x, mode, trace ? &trace->bottleneck : nullptr, quant, "bottleneck");

    for (std::size_t i = 0; i < model.decoder.size(); ++i) {
        DecoderParams& d = model.decoder[i];
        const std::string p = "dec" + std::to_string(i);
        if (trace) trace->decoder[i].up_in = x;
        Tensor up = ops::transpose_conv2x2(x, d.up_w, d.up_b);
        apply_site(up, p + ".up", quant);
        const Tensor& skip = skips[skips.size() - 1 - i];
        Tensor cat = ops::concat_channels(skip, up);
        if (trace) {
            trace->decoder[i].up_out = up;
            trace->decoder[i].skip_channels = skip.c;
        }
        x = run_block(d.block, cat, mode, trace ? &trace->decoder[i].block : nullptr, quant, p);
    }

    if (trace) trace->head_in = x;
    Tensor logits = ops::conv1x1_forward(x, model.head_w, {});
    // The head output is not an activation site: logits feed only the argmax
    // (no further quantized arithmetic), and snapping near-tied class scores
    // to an 8-bit grid would corrupt the prediction map itself.
    if (!logits.all_finite()) fail_numeric("forward produced non-finite logits");
    return logits;
}

void GradStore::add(const std::string& name, const float* g, std::size_t len) {
    auto& v = grads[name];
    if (v.empty()) v.assign(len, 0.0f);
    if (v.size() != len) fail_config("gradient length mismatch for " + name);
    for (std::size_t i = 0; i < len; ++i) v[i] += g[i];
}

const std::vector<float>& GradStore::at(const std::string& name) const {
    auto it = grads.find(name);
    if (it == grads.end()) fail_config("no gradient recorded for " + name);
    return it->second;
}

GradStore backward(UNetModel& model, const ForwardTrace& trace, const Tensor& d_logits) {
    GradStore store;

    ops::LayerGrad hg = ops::conv2d_backward(trace.head_in, model.head_w, d_logits);
    store.add("head.w", hg.d_weights.data.data(), hg.d_weights.size());
    Tensor d = std::move(hg.d_input);

    // Decoder stages in reverse (shallowest first); collect gradients flowing
    // into each encoder skip connection.
    std::vector<Tensor> d_skips(model.encoder.size());
    for (std::size_t ri = model.decoder.size(); ri-- > 0;) {
        const DecoderParams& dec = model.decoder[ri];
        const DecoderTrace& dt = trace.decoder[ri];
        const std::string p = "dec" + std::to_string(ri);
        Tensor d_cat = block_backward(dec.block, dt.block, d, store, p);
        auto [d_skip, d_up] = ops::split_channels(d_cat, dt.skip_channels);
        d_skips[model.encoder.size() - 1 - ri] = std::move(d_skip);
        ops::LayerGrad ug = ops::transpose_conv2x2_backward(dt.up_in, dec.up_w, d_up);
        store.add(p + ".up.w", ug.d_weights.data.data(), ug.d_weights.size());
        store.add(p + ".up.b", ug.d_bias.data(), ug.d_bias.size());
        d = std::move(ug.d_input);
    }

    d = block_backward(model.bottleneck, trace.bottleneck, d, store, "bottleneck");

    for (std::size_t ri = model.encoder.size(); ri-- > 0;) {
        const ops::PoolResult& pr = trace.pools[ri];
        const Tensor& pre_pool = trace.encoder[ri].c2.relu_out;
        Tensor d_pre = ops::maxpool2x2_backward(pr, d, pre_pool.h, pre_pool.w);
        // skip connection joins here
        for (std::size_t i = 0; i < d_pre.size(); ++i) d_pre.data[i] += d_skips[ri].data[i];
        d = block_backward(model.encoder[ri], trace.encoder[ri], d_pre, store, "enc" + std::to_string(ri));
    }

    return store;
}

Tensor normalize_input(const Tensor& raw, const NormStats& stats) {
    if (static_cast<int>(stats.mean.size()) != raw.c || static_cast<int>(stats.stddev.size()) != raw.c) {
        fail_config("normalize_input: stats length does not match channels");
    }
    for (float s : stats.stddev) {
        if (!(s > 0.0f)) fail_data("normalize_input: non-positive std");
    }
    Tensor out = raw;
    for (int in = 0; in < raw.n; ++in)
        for (int ic = 0; ic < raw.c; ++ic) {
            const float m = stats.mean[ic];
            const float inv = 1.0f / stats.stddev[ic];
            for (int y = 0; y < raw.h; ++y)
                for (int x = 0; x < raw.w; ++x) out.at(in, ic, y, x) = (raw.at(in, ic, y, x) - m) * inv;
        }
    return out;
}

}  // namespace tinyunet
