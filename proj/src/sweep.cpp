#include "tinyunet/sweep.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "tinyunet/quantize.hpp"

namespace tinyunet {

MetricsReport evaluate_model(UNetModel& model, const scene::SceneSet& set) {
    if (set.count() == 0) fail_data("evaluate: empty scene set");
    ConfusionCounts counts;
    for (std::size_t i = 0; i < set.count(); ++i) {
        Tensor x = normalize_input(set.cubes[i], model.norm_stats);
        Tensor logits = forward(model, x, ops::BatchNormMode::infer);
        counts += confusion(predict_classes(logits), set.labels[i]);
    }
    return compute_metrics(counts);
}

MetricsReport evaluate_quantized_model(const QuantizedModel& qmodel, const scene::SceneSet& set) {
    if (set.count() == 0) fail_data("evaluate: empty scene set");
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
    return compute_metrics(counts);
}

std::vector<SweepRow> run_sweep(const scene::SceneSet& train_set, const scene::SceneSet& val_set,
                                const TrainConfig& train_cfg) {
    std::vector<SweepRow> rows;
    for (int b = 4; b >= 1; --b) {
        for (int f : {1, 2, 4, 8, 16}) {
            ModelConfig cfg;
            cfg.levels = b;
            cfg.channel_divisor = f;
            UNetModel model = build_model(cfg, train_cfg.seed);
            train(model, train_set, val_set, train_cfg);

            SweepRow row;
            row.levels = b;
            row.channel_divisor = f;
            row.float_metrics = evaluate_model(model, val_set);
            QuantizedModel q = quantize_model(model, val_set);
            row.quant_metrics = evaluate_quantized_model(q, val_set);
            row.model_size_mib = model_size_mib(cfg);
            row.baseline = (b == 4 && f == 1);
            rows.push_back(std::move(row));
        }
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].float_metrics.mean_iou > rows[best].float_metrics.mean_iou) best = i;
    }
    rows[best].best_iou = true;
    return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream os;
    os << "B,F,iou,dice,precision,recall,iou_q,dice_q,precision_q,recall_q,model_size_mib,flag\n";
    os << std::setprecision(6);
    for (const SweepRow& r : rows) {
        os << r.levels << "," << r.channel_divisor << "," << r.float_metrics.mean_iou << ","
           << r.float_metrics.mean_dice << "," << r.float_metrics.mean_precision << ","
           << r.float_metrics.mean_recall << "," << r.quant_metrics.mean_iou << "," << r.quant_metrics.mean_dice
           << "," << r.quant_metrics.mean_precision << "," << r.quant_metrics.mean_recall << "," << std::fixed
           << std::setprecision(r.model_size_mib < 0.005 ? 3 : 2) << r.model_size_mib << std::defaultfloat
           << std::setprecision(6) << "," << (r.best_iou ? "best_iou" : (r.baseline ? "baseline" : "")) << "\n";
    }
    return os.str();
}

void save_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows) {
    std::ofstream out(path);
    if (!out) fail_data("cannot write " + path.string());
    out << sweep_csv(rows);
}

std::string size_table_csv() {
    std::ostringstream os;
    os << "B,F,params,size_mib\n";
    for (int b = 4; b >= 1; --b) {
        for (int f : {1, 2, 4, 8, 16}) {
            ModelConfig cfg;
            cfg.levels = b;
            cfg.channel_divisor = f;
            const double size = model_size_mib(cfg);
            os << b << "," << f << "," << param_count(cfg) << "," << std::fixed
               << std::setprecision(b == 1 && f == 16 ? 3 : 2) << size << std::defaultfloat << "\n";
        }
    }
    // reported compression ratio of the table-rounded sizes, baseline over best point
    ModelConfig big, best;
    big.levels = 4;
    big.channel_divisor = 1;
    best.levels = 2;
    best.channel_divisor = 4;
    const double ratio =
        std::round(model_size_mib(big) * 100.0) / std::round(model_size_mib(best) * 100.0);
    os << "# size(B=4,F=1)/size(B=2,F=4) = " << std::setprecision(1) << std::fixed << ratio << "x\n";
    return os.str();
}

}  // namespace tinyunet
