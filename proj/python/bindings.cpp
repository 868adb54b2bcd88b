#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "tinyunet/bench.hpp"
#include "tinyunet/dataset.hpp"
#include "tinyunet/quantize.hpp"
#include "tinyunet/serialize.hpp"
#include "tinyunet/sweep.hpp"
#include "tinyunet/trainer.hpp"

namespace py = pybind11;
using namespace tinyunet;

namespace {

Tensor tensor_from_numpy(py::array_t<float, py::array::c_style | py::array::forcecast> arr) {
    if (arr.ndim() != 4) throw py::value_error("expected a rank-4 NCHW array");
    Tensor t(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)), static_cast<int>(arr.shape(2)),
             static_cast<int>(arr.shape(3)));
    std::copy_n(arr.data(), t.size(), t.data.begin());
    return t;
}

py::array_t<float> tensor_to_numpy(const Tensor& t) {
    py::array_t<float> arr({t.n, t.c, t.h, t.w});
    std::copy_n(t.data.data(), t.size(), arr.mutable_data());
    return arr;
}

ClassMap classmap_from_numpy(py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> arr) {
    if (arr.ndim() != 3) throw py::value_error("expected a rank-3 (n, h, w) array");
    ClassMap m(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)), static_cast<int>(arr.shape(2)));
    std::copy_n(arr.data(), m.size(), m.data.begin());
    return m;
}

py::array_t<std::uint8_t> classmap_to_numpy(const ClassMap& m) {
    py::array_t<std::uint8_t> arr({m.n, m.h, m.w});
    std::copy_n(m.data.data(), m.size(), arr.mutable_data());
    return arr;
}

}  // namespace

PYBIND11_MODULE(_tinyunet, m) {
    m.doc() = "Tiny U-Net oil-slick thickness segmentation core";

    py::register_exception<Error>(m, "TinyUNetError");

    py::class_<ModelConfig>(m, "ModelConfig")
        .def(py::init([](int b, int f) {
                 ModelConfig c;
                 c.levels = b;
                 c.channel_divisor = f;
                 c.validate();
                 return c;
             }),
             py::arg("levels"), py::arg("channel_divisor"))
        .def_readwrite("levels", &ModelConfig::levels)
        .def_readwrite("channel_divisor", &ModelConfig::channel_divisor)
        .def_readwrite("in_channels", &ModelConfig::in_channels)
        .def_readwrite("num_classes", &ModelConfig::num_classes);

    m.def("param_count", &param_count, py::arg("config"));
    m.def("model_size_mib", &model_size_mib, py::arg("config"), py::arg("bytes_per_param") = 4);
    m.def("mac_count", &mac_count, py::arg("config"), py::arg("height"), py::arg("width"));
    m.def("channel_schedule", [](const ModelConfig& c) {
        ChannelSchedule s = channel_schedule(c);
        return py::make_tuple(s.encoder, s.bottleneck);
    });

    py::class_<UNetModel>(m, "UNetModel")
        .def_property_readonly("config", [](const UNetModel& mm) { return mm.config; });

    m.def("build_model", &build_model, py::arg("config"), py::arg("seed"));
    m.def(
        "forward",
        [](UNetModel& model, py::array_t<float, py::array::c_style | py::array::forcecast> input, bool train) {
            Tensor x = tensor_from_numpy(std::move(input));
            Tensor y = forward(model, x, train ? ops::BatchNormMode::train : ops::BatchNormMode::infer);
            return tensor_to_numpy(y);
        },
        py::arg("model"), py::arg("input"), py::arg("train") = false);

    m.def("conv2d_forward", [](py::array_t<float> input, py::array_t<float> weights, std::vector<float> bias) {
        Tensor x = tensor_from_numpy(std::move(input));
        Tensor w = tensor_from_numpy(std::move(weights));
        return tensor_to_numpy(ops::conv2d_forward(x, w, bias));
    });
    m.def("softmax_channels", [](py::array_t<float> input) {
        return tensor_to_numpy(ops::softmax_channels(tensor_from_numpy(std::move(input))));
    });

    m.def("save_model", [](const std::filesystem::path& p, UNetModel& model) { save_model(p, model); });
    m.def("load_model", &load_model);

    py::class_<scene::SceneConfig>(m, "SceneConfig")
        .def(py::init<>())
        .def_readwrite("height", &scene::SceneConfig::height)
        .def_readwrite("width", &scene::SceneConfig::width)
        .def_readwrite("noise_std", &scene::SceneConfig::noise_std)
        .def_readwrite("rms_height_coeff", &scene::SceneConfig::rms_height_coeff);

    py::class_<scene::SceneSet>(m, "SceneSet")
        .def_property_readonly("count", &scene::SceneSet::count)
        .def("cube", [](const scene::SceneSet& s, std::size_t i) { return tensor_to_numpy(s.cubes.at(i)); })
        .def("labels", [](const scene::SceneSet& s, std::size_t i) { return classmap_to_numpy(s.labels.at(i)); });

    m.def(
        "generate_set",
        [](int count, const scene::SceneConfig& cfg, std::uint64_t seed) {
            scene::RadarConfig radar;
            return scene::generate_set(count, cfg, radar, seed);
        },
        py::arg("count"), py::arg("config"), py::arg("master_seed"));
    m.def("water_permittivity", &scene::water_permittivity, py::arg("freq_ghz"), py::arg("temp_c") = 20.0,
          py::arg("salinity_ppt") = 35.0);
    m.def("layered_reflectance", &scene::layered_reflectance);
    m.def("roughness_attenuation", &scene::roughness_attenuation);

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("epochs", &TrainConfig::epochs)
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("learning_rate", &TrainConfig::learning_rate)
        .def_readwrite("seed", &TrainConfig::seed);

    m.def("train", [](UNetModel& model, const scene::SceneSet& tr, const scene::SceneSet& va, const TrainConfig& c) {
        TrainReport r = train(model, tr, va, c);
        py::list rows;
        for (const EpochRow& e : r.epochs) {
            rows.append(py::dict(py::arg("epoch") = e.epoch, py::arg("train_loss") = e.train_loss,
                                 py::arg("val_loss") = e.val_loss, py::arg("val_miou") = e.val_miou));
        }
        return rows;
    });

    m.def("evaluate_miou", &evaluate_miou);
    m.def("confusion_metrics", [](py::array_t<std::uint8_t> pred, py::array_t<std::uint8_t> truth) {
        MetricsReport r = compute_metrics(
            confusion(classmap_from_numpy(std::move(pred)), classmap_from_numpy(std::move(truth))));
        return py::dict(py::arg("mean_iou") = r.mean_iou, py::arg("mean_dice") = r.mean_dice,
                        py::arg("mean_precision") = r.mean_precision, py::arg("mean_recall") = r.mean_recall);
    });

    m.def("quantize_model", &quantize_model);
    m.def("quantized_forward", [](const QuantizedModel& q, py::array_t<float> input) {
        return tensor_to_numpy(quantized_forward(q, tensor_from_numpy(std::move(input))));
    });
    py::class_<QuantizedModel>(m, "QuantizedModel");
    m.def("evaluate_miou_quantized", &evaluate_miou_quantized);
    m.def("save_quantized_model", &save_quantized_model);
    m.def("load_quantized_model", &load_quantized_model);

    m.def("quantize_values", [](std::vector<float> values) {
        auto [payload, qp] = quantize_tensor(values);
        return py::make_tuple(payload, qp.scale, qp.zero_point);
    });
}
