#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "tinyunet/bench.hpp"
#include "tinyunet/dataset.hpp"
#include "tinyunet/quantize.hpp"
#include "tinyunet/serialize.hpp"
#include "tinyunet/sweep.hpp"
#include "tinyunet/trainer.hpp"

namespace fs = std::filesystem;
using namespace tinyunet;

namespace {

int exit_code_for(const Error& e) {
    switch (e.kind()) {
        case ErrorKind::config: return 2;
        case ErrorKind::data: return 3;
        case ErrorKind::numeric: return 4;
    }
    return 1;
}

struct GenDataArgs {
    std::string out_dir = "data";
    std::uint64_t seed = 42;
    int count = 80;
    scene::SceneConfig scene;
};

void add_gen_data(CLI::App& app, bool& json_out) {
    auto args = std::make_shared<GenDataArgs>();
    CLI::App* cmd = app.add_subcommand("gen-data", "Generate a synthetic radar dataset");
    cmd->set_config("--config", "", "Declarative key/value config file");
    cmd->add_option("--out", args->out_dir, "Output directory");
    cmd->add_option("--seed", args->seed, "Master seed");
    cmd->add_option("--count", args->count, "Total scene count (split ~10:1 train/val)");
    cmd->add_option("--height", args->scene.height, "Scene grid height");
    cmd->add_option("--width", args->scene.width, "Scene grid width");
    cmd->add_option("--noise-std", args->scene.noise_std, "Relative noise std");
    cmd->add_option("--rms-height-coeff", args->scene.rms_height_coeff, "RMS surface height per (m/s) wind");
    cmd->add_option("--oil-permittivity", args->scene.oil_rel_permittivity, "Oil relative permittivity");
    cmd->add_option("--oil-loss-tangent", args->scene.oil_loss_tangent, "Oil dielectric loss tangent");
    cmd->add_option("--slick-damping", args->scene.slick_damping,
                    "Fraction of wind roughness remaining over oil (capillary-wave damping)");
    cmd->add_option("--wind-min", args->scene.wind_min_mps, "Min wind speed (m/s)");
    cmd->add_option("--wind-max", args->scene.wind_max_mps, "Max wind speed (m/s)");
    cmd->callback([args, &json_out] {
        scene::RadarConfig radar;
        auto [train, val] = scene::generate_set(args->count, args->scene, radar, args->seed);
        const fs::path manifest = scene::save_dataset(args->out_dir, train, val, args->seed);
        if (json_out) {
            nlohmann::json j{{"manifest", manifest.string()},
                             {"train_scenes", train.count()},
                             {"val_scenes", val.count()}};
            std::cout << j.dump(2) << "\n";
        } else {
            std::cout << "wrote " << train.count() << "+" << val.count() << " scenes, manifest " << manifest.string()
                      << "\n";
        }
    });
}

struct TrainArgs {
    std::string data_dir;
    std::string out_model = "model.tunw";
    std::string report_csv = "train_report.csv";
    int levels = 2, divisor = 4;
    TrainConfig cfg;
    std::string optimizer = "adam";
};

void add_train(CLI::App& app, bool& json_out) {
    auto args = std::make_shared<TrainArgs>();
    CLI::App* cmd = app.add_subcommand("train", "Train a (B, F) model on a generated dataset");
    cmd->set_config("--config", "", "Declarative key/value config file");
    cmd->add_option("--data", args->data_dir, "Dataset directory")->required();
    cmd->add_option("-B,--levels", args->levels, "Encoder/decoder block count B (1..4)");
    cmd->add_option("-F,--divisor", args->divisor, "Channel divisor F (1,2,4,8,16)");
    cmd->add_option("--epochs", args->cfg.epochs, "Training epochs");
    cmd->add_option("--batch-size", args->cfg.batch_size, "Mini-batch size");
    cmd->add_option("--lr", args->cfg.learning_rate, "Learning rate");
    cmd->add_option("--seed", args->cfg.seed, "Init/shuffle seed");
    cmd->add_option("--optimizer", args->optimizer, "adam|sgd");
    cmd->add_option("--out", args->out_model, "Output model file");
    cmd->add_option("--report", args->report_csv, "Per-epoch report CSV");
    cmd->callback([args, &json_out] {
        if (args->optimizer == "sgd") {
            args->cfg.optimizer = OptimizerKind::sgd;
        } else if (args->optimizer != "adam") {
            fail_config("unknown optimizer: " + args->optimizer);
        }
        scene::LoadedDataset ds = scene::load_dataset(args->data_dir);
        ModelConfig mc;
        mc.levels = args->levels;
        mc.channel_divisor = args->divisor;
        UNetModel model = build_model(mc, args->cfg.seed);
        TrainReport report = train(model, ds.train, ds.val, args->cfg);
        save_model(args->out_model, model);
        report.save_csv(args->report_csv);
        if (json_out) {
            nlohmann::json j{{"model", args->out_model}, {"report", args->report_csv}};
            if (!report.epochs.empty()) j["final_val_miou"] = report.epochs.back().val_miou;
            std::cout << j.dump(2) << "\n";
        } else {
            std::cout << "model " << args->out_model << ", report " << args->report_csv;
            if (!report.epochs.empty()) std::cout << ", final val mIoU " << report.epochs.back().val_miou;
            std::cout << "\n";
        }
    });
}

struct EvalArgs {
    std::string model_file, data_dir, out_json;
    bool quantized = false;
    bool truth_self = false;  // debug: score the truth against itself
};

void add_eval(CLI::App& app) {
    auto args = std::make_shared<EvalArgs>();
    CLI::App* cmd = app.add_subcommand("eval", "Evaluate a model on the validation split");
    cmd->add_option("--model", args->model_file, "Model file")->required();
    cmd->add_option("--data", args->data_dir, "Dataset directory")->required();
    cmd->add_flag("--quantized", args->quantized, "Evaluate the quantized payload");
    cmd->add_flag("--truth-self", args->truth_self, "Debug: evaluate truth against truth");
    cmd->add_option("--out", args->out_json, "Write the metrics JSON here instead of stdout");
    cmd->callback([args] {
        scene::LoadedDataset ds = scene::load_dataset(args->data_dir);
        MetricsReport report;
        if (args->truth_self) {
            ConfusionCounts counts;
            for (const ClassMap& labels : ds.val.labels) counts += confusion(labels, labels);
            report = compute_metrics(counts);
        } else if (args->quantized) {
            QuantizedModel q = load_quantized_model(args->model_file);
            report = evaluate_quantized_model(q, ds.val);
        } else {
            UNetModel model = load_model(args->model_file);
            report = evaluate_model(model, ds.val);
        }
        const std::string text = report.to_json();
        if (args->out_json.empty()) {
            std::cout << text << "\n";
        } else {
            std::ofstream out(args->out_json);
            if (!out) fail_data("cannot write " + args->out_json);
            out << text << "\n";
        }
    });
}

void add_quantize(CLI::App& app) {
    auto model_file = std::make_shared<std::string>();
    auto data_dir = std::make_shared<std::string>();
    auto out_file = std::make_shared<std::string>("model_q.tunw");
    CLI::App* cmd = app.add_subcommand("quantize", "Post-training 8-bit quantization of a trained model");
    cmd->add_option("--model", *model_file, "Trained float model")->required();
    cmd->add_option("--data", *data_dir, "Dataset directory (validation split calibrates)")->required();
    cmd->add_option("--out", *out_file, "Output quantized model file");
    cmd->callback([model_file, data_dir, out_file] {
        scene::LoadedDataset ds = scene::load_dataset(*data_dir);
        UNetModel model = load_model(*model_file);
        QuantizedModel q = quantize_model(model, ds.val);
        save_quantized_model(*out_file, q);
        std::cout << "quantized model written to " << *out_file << "\n";
    });
}

struct SweepArgs {
    std::string data_dir;
    std::string out_csv = "sweep.csv";
    TrainConfig cfg;
};

void add_sweep(CLI::App& app) {
    auto args = std::make_shared<SweepArgs>();
    CLI::App* cmd = app.add_subcommand("sweep", "Train and evaluate the full 4x5 (B, F) grid");
    cmd->set_config("--config", "", "Declarative key/value config file");
    cmd->add_option("--data", args->data_dir, "Dataset directory")->required();
    cmd->add_option("--out", args->out_csv, "Output CSV");
    cmd->add_option("--epochs", args->cfg.epochs, "Training epochs per grid point");
    cmd->add_option("--batch-size", args->cfg.batch_size, "Mini-batch size");
    cmd->add_option("--lr", args->cfg.learning_rate, "Learning rate");
    cmd->add_option("--seed", args->cfg.seed, "Shared seed for all grid points");
    cmd->callback([args] {
        scene::LoadedDataset ds = scene::load_dataset(args->data_dir);
        std::vector<SweepRow> rows = run_sweep(ds.train, ds.val, args->cfg);
        save_sweep_csv(args->out_csv, rows);
        std::cout << sweep_csv(rows);
    });
}

void add_size_table(CLI::App& app) {
    auto out_csv = std::make_shared<std::string>();
    CLI::App* cmd = app.add_subcommand("size-table", "Analytic parameter counts and model sizes for the grid");
    cmd->add_option("--out", *out_csv, "Also write the CSV here");
    cmd->callback([out_csv] {
        const std::string csv = size_table_csv();
        if (!out_csv->empty()) {
            std::ofstream out(*out_csv);
            if (!out) fail_data("cannot write " + *out_csv);
            out << csv;
        }
        std::cout << csv;
    });
}

struct BenchArgs {
    std::string model_file, out_json;
    BenchConfig cfg;
};

void add_bench(CLI::App& app) {
    auto args = std::make_shared<BenchArgs>();
    CLI::App* cmd = app.add_subcommand("bench", "Measure CPU inference latency");
    cmd->add_option("--model", args->model_file, "Model file (float or quantized)")->required();
    cmd->add_option("--runs", args->cfg.runs, "Measured runs (>= 30)");
    cmd->add_option("--warmup", args->cfg.warmup, "Warmup runs");
    cmd->add_option("--height", args->cfg.height, "Input height");
    cmd->add_option("--width", args->cfg.width, "Input width");
    cmd->add_option("--out", args->out_json, "Write the report JSON here instead of stdout");
    cmd->callback([args] {
        BenchReport report;
        if (model_file_is_quantized(args->model_file)) {
            QuantizedModel q = load_quantized_model(args->model_file);
            report = bench_quantized(q, args->cfg);
        } else {
            UNetModel model = load_model(args->model_file);
            report = bench_float(model, args->cfg);
        }
        const std::string text = report.to_json();
        if (args->out_json.empty()) {
            std::cout << text << "\n";
        } else {
            std::ofstream out(args->out_json);
            if (!out) fail_data("cannot write " + args->out_json);
            out << text << "\n";
        }
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tiny U-Net oil-slick thickness segmentation toolkit"};
    app.require_subcommand(1);
    bool json_out = false;
    app.add_flag("--json", json_out, "Machine-readable output where applicable");

    add_gen_data(app, json_out);
    add_train(app, json_out);
    add_eval(app);
    add_quantize(app);
    add_sweep(app);
    add_size_table(app);
    add_bench(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
