#include "tinyunet/dataset.hpp"

#include <cstring>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <sstream>

namespace tinyunet::scene {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t fnv1a64(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

std::vector<char> scene_record_bytes(const Tensor& cube, const ClassMap& labels) {
    std::vector<char> buf(cube.size() * sizeof(float) + labels.size());
    std::memcpy(buf.data(), cube.data.data(), cube.size() * sizeof(float));
    std::memcpy(buf.data() + cube.size() * sizeof(float), labels.data.data(), labels.size());
    return buf;
}

json scene_config_json(const SceneConfig& c) {
    return {{"height", c.height},
            {"width", c.width},
            {"wind_min_mps", c.wind_min_mps},
            {"wind_max_mps", c.wind_max_mps},
            {"oil_rel_permittivity", c.oil_rel_permittivity},
            {"oil_loss_tangent", c.oil_loss_tangent},
            {"water_temp_c", c.water_temp_c},
            {"salinity_ppt", c.salinity_ppt},
            {"rms_height_coeff", c.rms_height_coeff},
            {"slick_damping", c.slick_damping},
            {"noise_std", c.noise_std}};
}

SceneConfig scene_config_from_json(const json& j) {
    SceneConfig c;
    c.height = j.at("height");
    c.width = j.at("width");
    c.wind_min_mps = j.at("wind_min_mps");
    c.wind_max_mps = j.at("wind_max_mps");
    c.oil_rel_permittivity = j.at("oil_rel_permittivity");
    c.oil_loss_tangent = j.at("oil_loss_tangent");
    c.water_temp_c = j.at("water_temp_c");
    c.salinity_ppt = j.at("salinity_ppt");
    c.rms_height_coeff = j.at("rms_height_coeff");
    c.slick_damping = j.at("slick_damping");
    c.noise_std = j.at("noise_std");
    return c;
}

void append_scenes(json& arr, const SceneSet& set, const char* split, const fs::path& dir, int& index) {
    for (std::size_t i = 0; i < set.count(); ++i) {
        std::ostringstream name;
        name << "scene_" << std::setw(4) << std::setfill('0') << index << ".bin";
        const fs::path file = dir / name.str();
        const std::vector<char> bytes = scene_record_bytes(set.cubes[i], set.labels[i]);
        std::ofstream out(file, std::ios::binary);
        if (!out) fail_data("cannot write " + file.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        arr.push_back({{"file", name.str()},
                       {"split", split},
                       {"seed", set.seeds[i]},
                       {"wind_mps", set.winds[i]},
                       {"checksum", hex64(fnv1a64(bytes.data(), bytes.size()))}});
        ++index;
    }
}

}  // namespace

fs::path save_dataset(const fs::path& dir, const SceneSet& train, const SceneSet& val, std::uint64_t master_seed) {
    fs::create_directories(dir);
    json manifest;
    manifest["format"] = "tinyunet-dataset-v1";
    manifest["master_seed"] = master_seed;
    manifest["scene_config"] = scene_config_json(train.scene_cfg);
    manifest["frequencies_ghz"] = train.radar_cfg.frequencies_ghz;
    json scenes = json::array();
    int index = 0;
    append_scenes(scenes, train, "train", dir, index);
    append_scenes(scenes, val, "val", dir, index);
    manifest["scenes"] = scenes;

    const fs::path mpath = dir / "manifest.json";
    std::ofstream out(mpath);
    if (!out) fail_data("cannot write " + mpath.string());
    out << manifest.dump(2) << "\n";
    return mpath;
}

LoadedDataset load_dataset(const fs::path& dir) {
    const fs::path mpath = dir / "manifest.json";
    std::ifstream in(mpath);
    if (!in) fail_data("missing manifest: " + mpath.string());
    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception& e) {
        fail_data("bad manifest " + mpath.string() + ": " + e.what());
    }
    if (manifest.value("format", "") != "tinyunet-dataset-v1") fail_data("unknown dataset format");

    LoadedDataset ds;
    ds.master_seed = manifest.at("master_seed");
    SceneConfig cfg = scene_config_from_json(manifest.at("scene_config"));
    RadarConfig radar;
    radar.frequencies_ghz = manifest.at("frequencies_ghz").get<std::vector<double>>();
    radar.validate();
    ds.train.scene_cfg = ds.val.scene_cfg = cfg;
    ds.train.radar_cfg = ds.val.radar_cfg = radar;

    const int channels = static_cast<int>(radar.frequencies_ghz.size());
    const std::size_t cube_bytes = static_cast<std::size_t>(channels) * cfg.height * cfg.width * sizeof(float);
    const std::size_t label_bytes = static_cast<std::size_t>(cfg.height) * cfg.width;

    for (const json& s : manifest.at("scenes")) {
        const fs::path file = dir / s.at("file").get<std::string>();
        std::ifstream rec(file, std::ios::binary);
        if (!rec) fail_data("missing scene record: " + file.string());
        std::vector<char> bytes((std::istreambuf_iterator<char>(rec)), std::istreambuf_iterator<char>());
        if (bytes.size() != cube_bytes + label_bytes) fail_data("truncated scene record: " + file.string());
        if (hex64(fnv1a64(bytes.data(), bytes.size())) != s.at("checksum").get<std::string>()) {
            fail_data("checksum mismatch in " + file.string());
        }
        Tensor cube(1, channels, cfg.height, cfg.width);
        std::memcpy(cube.data.data(), bytes.data(), cube_bytes);
        ClassMap labels(1, cfg.height, cfg.width);
        std::memcpy(labels.data.data(), bytes.data() + cube_bytes, label_bytes);

        SceneSet& dst = s.at("split").get<std::string>() == "train" ? ds.train : ds.val;
        dst.cubes.push_back(std::move(cube));
        dst.labels.push_back(std::move(labels));
        dst.winds.push_back(s.at("wind_mps"));
        dst.seeds.push_back(s.at("seed"));
    }
    if (ds.train.count() == 0) fail_data("dataset has no training scenes");
    return ds;
}

void write_label_pgm(const fs::path& path, const ClassMap& labels, int scene_index) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail_data("cannot write " + path.string());
    out << "P5\n" << labels.w << " " << labels.h << "\n255\n";
    for (int y = 0; y < labels.h; ++y) {
        for (int x = 0; x < labels.w; ++x) {
            const unsigned char v = static_cast<unsigned char>(labels.at(scene_index, y, x) * 255 / 10);
            out.put(static_cast<char>(v));
        }
    }
}

}  // namespace tinyunet::scene
