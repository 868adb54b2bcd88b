#include "tinyunet/quantize.hpp"

#include <algorithm>
#include <cmath>

#include "tinyunet/metrics.hpp"
#include "tinyunet/trainer.hpp"

namespace tinyunet {

QuantParams quant_params_for(std::span<const float> values) {
    float lo = 0.0f, hi = 0.0f;  // range always includes 0
    for (float v : values) {
        if (!std::isfinite(v)) fail_numeric("quantize: non-finite value");
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    QuantParams qp;
    const double scale = (static_cast<double>(hi) - lo) / 255.0;
    if (scale <= 0.0) {
        qp.scale = 1.0f;
        qp.zero_point = 0;
        return qp;
    }
    qp.scale = static_cast<float>(scale);
    qp.zero_point = static_cast<int>(std::clamp(std::round(-lo / scale), 0.0, 255.0));
    return qp;
}

std::vector<std::uint8_t> quantize_values(std::span<const float> values, const QuantParams& qp) {
    std::vector<std::uint8_t> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double q =
            std::clamp(std::round(static_cast<double>(values[i]) / qp.scale) + qp.zero_point, 0.0, 255.0);
        out[i] = static_cast<std::uint8_t>(q);
    }
    return out;
}

std::vector<float> dequantize_values(std::span<const std::uint8_t> payload, const QuantParams& qp) {
    std::vector<float> out(payload.size());
    for (std::size_t i = 0; i < payload.size(); ++i) {
        out[i] = static_cast<float>((static_cast<int>(payload[i]) - qp.zero_point) * static_cast<double>(qp.scale));
    }
    return out;
}

std::pair<std::vector<std::uint8_t>, QuantParams> quantize_tensor(std::span<const float> values) {
    const QuantParams qp = quant_params_for(values);
    return {quantize_values(values, qp), qp};
}

std::map<std::string, QuantRange> calibrate(UNetModel& model, const scene::SceneSet& calibration_set) {
    if (calibration_set.count() == 0) fail_data("calibrate: empty calibration set");
    std::map<std::string, QuantRange> ranges;
    QuantContext qc;
    qc.mode = QuantContext::Mode::calibrate;
    qc.ranges = &ranges;
    for (std::size_t i = 0; i < calibration_set.count(); ++i) {
        Tensor x = normalize_input(calibration_set.cubes[i], model.norm_stats);
        forward(model, x, ops::BatchNormMode::infer, nullptr, &qc);
    }
    return ranges;
}

QuantizedModel quantize_model(UNetModel& model, const scene::SceneSet& calibration_set) {
    QuantizedModel q;
    q.config = model.config;
    q.norm_stats = model.norm_stats;
    q.act_ranges = calibrate(model, calibration_set);
    for (const ParamRef& r : param_refs(model)) {
        if (!r.trainable) {
            q.running_stats[r.name] = std::vector<float>(r.data, r.data + r.size);
            continue;
        }
        QuantizedTensor t;
        t.name = r.name;
        t.shape = r.shape.empty() ? std::vector<int>{static_cast<int>(r.size)} : r.shape;
        auto [payload, qp] = quantize_tensor({r.data, r.size});
        t.qp = qp;
        t.payload = std::move(payload);
        q.tensors.push_back(std::move(t));
    }
    return q;
}

UNetModel dequantize_model(const QuantizedModel& qmodel) {
    UNetModel m = build_model(qmodel.config, 0);
    m.norm_stats = qmodel.norm_stats;
    std::vector<ParamRef> refs = param_refs(m);
    std::size_t qi = 0;
    for (ParamRef& r : refs) {
        if (!r.trainable) {
            auto it = qmodel.running_stats.find(r.name);
            if (it == qmodel.running_stats.end() || it->second.size() != r.size) {
                fail_data("quantized model: missing running stats for " + r.name);
            }
            std::copy(it->second.begin(), it->second.end(), r.data);
            continue;
        }
        if (qi >= qmodel.tensors.size() || qmodel.tensors[qi].name != r.name ||
            qmodel.tensors[qi].payload.size() != r.size) {
            fail_data("quantized model: tensor manifest mismatch at " + r.name);
        }
        const std::vector<float> vals = dequantize_values(qmodel.tensors[qi].payload, qmodel.tensors[qi].qp);
        std::copy(vals.begin(), vals.end(), r.data);
        ++qi;
    }
    return m;
}

Tensor quantized_forward(const QuantizedModel& qmodel, const Tensor& input) {
    UNetModel m = dequantize_model(qmodel);
    std::map<std::string, QuantRange> ranges = qmodel.act_ranges;
    QuantContext qc;
    qc.mode = QuantContext::Mode::apply;
    qc.ranges = &ranges;
    return forward(m, input, ops::BatchNormMode::infer, nullptr, &qc);
}

double evaluate_miou_quantized(const QuantizedModel& qmodel, const scene::SceneSet& set) {
    UNetModel m = dequantize_model(qmodel);
    std::map<std::string, QuantRange> ranges = qmodel.act_ranges;
    ConfusionCounts counts;
    for (std::size_t i = 0; i < set.count(); ++i) {
        Tensor x = normalize_input(set.cubes[i], m.norm_stats);
        QuantContext qc;
        qc.mode = QuantContext::Mode::apply;
        qc.ranges = &ranges;
        Tensor logits = forward(m, x, ops::BatchNormMode::infer, nullptr, &qc);
        counts += confusion(predict_classes(logits), set.labels[i]);
    }
    return compute_metrics(counts).mean_iou;
}

}  // namespace tinyunet
