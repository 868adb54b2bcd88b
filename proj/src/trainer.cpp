#include "tinyunet/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "tinyunet/metrics.hpp"

namespace tinyunet {

void TrainConfig::validate() const {
    if (epochs < 0) fail_config("epochs must be >= 0");
    if (batch_size < 1) fail_config("batch_size must be >= 1");
    if (learning_rate < 0.0) fail_config("learning_rate must be >= 0");
}

std::string TrainReport::to_csv() const {
    std::ostringstream os;
    os << "epoch,train_loss,val_loss,val_miou,seconds\n";
    for (const EpochRow& r : epochs) {
        os << r.epoch << "," << r.train_loss << "," << r.val_loss << "," << r.val_miou << "," << r.seconds << "\n";
    }
    return os.str();
}

void TrainReport::save_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) fail_data("cannot write " + path.string());
    out << to_csv();
}

std::pair<double, Tensor> cross_entropy_loss(const Tensor& logits, const ClassMap& labels) {
    if (logits.n != labels.n || logits.h != labels.h || logits.w != labels.w) {
        fail_config("cross_entropy: logits " + logits.shape_str() + " do not match label map");
    }
    const int classes = logits.c;
    const double inv_count = 1.0 / (static_cast<double>(logits.n) * logits.h * logits.w);
    Tensor d_logits = zeros_like(logits);
    double loss = 0.0;
    for (int in = 0; in < logits.n; ++in) {
        for (int y = 0; y < logits.h; ++y) {
            for (int x = 0; x < logits.w; ++x) {
                const int label = labels.at(in, y, x);
                if (label >= classes) fail_data("cross_entropy: label " + std::to_string(label) + " out of range");
                double mx = logits.at(in, 0, y, x);
                for (int c = 1; c < classes; ++c) mx = std::max(mx, static_cast<double>(logits.at(in, c, y, x)));
                double denom = 0.0;
                for (int c = 0; c < classes; ++c) denom += std::exp(logits.at(in, c, y, x) - mx);
                const double log_denom = std::log(denom);
                loss += -(logits.at(in, label, y, x) - mx - log_denom) * inv_count;
                for (int c = 0; c < classes; ++c) {
                    const double p = std::exp(logits.at(in, c, y, x) - mx - log_denom);
                    d_logits.at(in, c, y, x) =
                        static_cast<float>((p - (c == label ? 1.0 : 0.0)) * inv_count);
                }
            }
        }
    }
    return {loss, std::move(d_logits)};
}

NormStats fit_norm_stats(const scene::SceneSet& training_set) {
    if (training_set.count() == 0) fail_data("fit_norm_stats: empty training set");
    const int channels = training_set.cubes.front().c;
    std::vector<double> sum(channels, 0.0), sum_sq(channels, 0.0);
    std::int64_t pixels = 0;
    for (const Tensor& cube : training_set.cubes) {
        for (int ic = 0; ic < channels; ++ic) {
            for (int y = 0; y < cube.h; ++y) {
                for (int x = 0; x < cube.w; ++x) {
                    const double v = cube.at(0, ic, y, x);
                    sum[ic] += v;
                    sum_sq[ic] += v * v;
                }
            }
        }
        pixels += static_cast<std::int64_t>(cube.h) * cube.w;
    }
    NormStats s;
    s.mean.resize(channels);
    s.stddev.resize(channels);
    for (int ic = 0; ic < channels; ++ic) {
        const double mean = sum[ic] / pixels;
        const double var = sum_sq[ic] / pixels - mean * mean;
        if (var <= 0.0) fail_data("fit_norm_stats: zero-variance channel " + std::to_string(ic));
        s.mean[ic] = static_cast<float>(mean);
        s.stddev[ic] = static_cast<float>(std::sqrt(var));
    }
    return s;
}

ClassMap predict_classes(const Tensor& logits) {
    ClassMap pred(logits.n, logits.h, logits.w);
    for (int in = 0; in < logits.n; ++in)
        for (int y = 0; y < logits.h; ++y)
            for (int x = 0; x < logits.w; ++x) {
                int best = 0;
                float bv = logits.at(in, 0, y, x);
                for (int c = 1; c < logits.c; ++c) {
                    if (logits.at(in, c, y, x) > bv) {
                        bv = logits.at(in, c, y, x);
                        best = c;
                    }
                }
                pred.at(in, y, x) = static_cast<std::uint8_t>(best);
            }
    return pred;
}

namespace {

Tensor batch_cubes(const scene::SceneSet& set, const std::vector<int>& indices, std::size_t from, std::size_t to) {
    const Tensor& first = set.cubes[indices[from]];
    Tensor batch(static_cast<int>(to - from), first.c, first.h, first.w);
    const std::size_t per = first.size();
    for (std::size_t i = from; i < to; ++i) {
        std::copy_n(set.cubes[indices[i]].data.begin(), per, batch.data.begin() + (i - from) * per);
    }
    return batch;
}

ClassMap batch_labels(const scene::SceneSet& set, const std::vector<int>& indices, std::size_t from,
                      std::size_t to) {
    const ClassMap& first = set.labels[indices[from]];
    ClassMap batch(static_cast<int>(to - from), first.h, first.w);
    const std::size_t per = first.size();
    for (std::size_t i = from; i < to; ++i) {
        std::copy_n(set.labels[indices[i]].data.begin(), per, batch.data.begin() + (i - from) * per);
    }
    return batch;
}

class Optimizer {
public:
    Optimizer(const TrainConfig& cfg, const std::vector<ParamRef>& refs) : cfg_(cfg) {
        if (cfg.optimizer == OptimizerKind::adam) {
            for (const ParamRef& r : refs) {
                if (!r.trainable) continue;
                m_[r.name].assign(r.size, 0.0);
                v_[r.name].assign(r.size, 0.0);
            }
        }
    }

    void step(const std::vector<ParamRef>& refs, const GradStore& grads) {
        ++t_;
        for (const ParamRef& r : refs) {
            if (!r.trainable) continue;
            const std::vector<float>& g = grads.at(r.name);
            if (cfg_.optimizer == OptimizerKind::sgd) {
                for (std::size_t i = 0; i < r.size; ++i) {
                    r.data[i] = static_cast<float>(r.data[i] - cfg_.learning_rate * g[i]);
                }
            } else {
                std::vector<double>& m = m_[r.name];
                std::vector<double>& v = v_[r.name];
                const double b1 = cfg_.adam_beta1, b2 = cfg_.adam_beta2;
                const double bias1 = 1.0 - std::pow(b1, t_);
                const double bias2 = 1.0 - std::pow(b2, t_);
                for (std::size_t i = 0; i < r.size; ++i) {
                    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                    v[i] = b2 * v[i] + (1.0 - b2) * static_cast<double>(g[i]) * g[i];
                    const double mhat = m[i] / bias1;
                    const double vhat = v[i] / bias2;
                    r.data[i] =
                        static_cast<float>(r.data[i] - cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.adam_eps));
                }
            }
        }
    }

private:
    TrainConfig cfg_;
    int t_ = 0;
    std::unordered_map<std::string, std::vector<double>> m_, v_;
};

}  // namespace

double evaluate_miou(UNetModel& model, const scene::SceneSet& set) {
    ConfusionCounts counts;
    for (std::size_t i = 0; i < set.count(); ++i) {
        Tensor x = normalize_input(set.cubes[i], model.norm_stats);
        Tensor logits = forward(model, x, ops::BatchNormMode::infer);
        counts += confusion(predict_classes(logits), set.labels[i]);
    }
    return compute_metrics(counts).mean_iou;
}

TrainReport train(UNetModel& model, const scene::SceneSet& train_set, const scene::SceneSet& val_set,
                  const TrainConfig& cfg) {
    cfg.validate();
    if (train_set.count() == 0) fail_data("train: empty training set");

    model.norm_stats = fit_norm_stats(train_set);
    std::vector<ParamRef> refs = param_refs(model);
    Optimizer opt(cfg, refs);
    std::mt19937_64 shuffle_rng(cfg.seed);

    std::vector<int> order(train_set.count());
    std::iota(order.begin(), order.end(), 0);

    TrainReport report;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        double loss_sum = 0.0;
        int batches = 0;
        for (std::size_t from = 0; from < order.size(); from += cfg.batch_size) {
            const std::size_t to = std::min(order.size(), from + cfg.batch_size);
            Tensor x = normalize_input(batch_cubes(train_set, order, from, to), model.norm_stats);
            ClassMap y = batch_labels(train_set, order, from, to);

            ForwardTrace trace;
            Tensor logits = forward(model, x, ops::BatchNormMode::train, &trace);
            auto [loss, d_logits] = cross_entropy_loss(logits, y);
            if (!std::isfinite(loss)) fail_numeric("training loss is not finite");
            GradStore grads = backward(model, trace, d_logits);
            opt.step(refs, grads);
            loss_sum += loss;
            ++batches;
        }

        EpochRow row;
        row.epoch = epoch + 1;
        row.train_loss = batches > 0 ? loss_sum / batches : 0.0;
        if (val_set.count() > 0) {
            ConfusionCounts counts;
            double vloss = 0.0;
            for (std::size_t i = 0; i < val_set.count(); ++i) {
                Tensor x = normalize_input(val_set.cubes[i], model.norm_stats);
                Tensor logits = forward(model, x, ops::BatchNormMode::infer);
                auto [l, g] = cross_entropy_loss(logits, val_set.labels[i]);
                (void)g;
                vloss += l;
                counts += confusion(predict_classes(logits), val_set.labels[i]);
            }
            row.val_loss = vloss / static_cast<double>(val_set.count());
            row.val_miou = compute_metrics(counts).mean_iou;
        }
        row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report.epochs.push_back(row);
    }
    return report;
}

}  // namespace tinyunet
