#include "tinyunet/serialize.hpp"

#include <cstring>
#include <fstream>
#include <json.hpp>

namespace tinyunet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'T', 'U', 'N', 'W', ' ', 'v', '1', '\n'};

json config_json(const ModelConfig& c) {
    return {{"B", c.levels},
            {"F", c.channel_divisor},
            {"in_channels", c.in_channels},
            {"num_classes", c.num_classes},
            {"base_width", c.base_width}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig c;
    c.levels = j.at("B");
    c.channel_divisor = j.at("F");
    c.in_channels = j.at("in_channels");
    c.num_classes = j.at("num_classes");
    c.base_width = j.at("base_width");
    c.validate();
    return c;
}

json header_common(const ModelConfig& cfg, const NormStats& stats) {
    const ChannelSchedule sched = channel_schedule(cfg);
    json h;
    h["format"] = "TUNW v1";
    h["config"] = config_json(cfg);
    h["channel_schedule"] = {{"encoder", sched.encoder}, {"bottleneck", sched.bottleneck}};
    h["norm_stats"] = {{"mean", stats.mean}, {"stddev", stats.stddev}};
    return h;
}

void write_container(const fs::path& path, const json& header, const std::vector<char>& payload) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail_data("cannot write " + path.string());
    out.write(kMagic, sizeof(kMagic));
    const std::string htext = header.dump();
    std::uint64_t hlen = htext.size();
    char lenbuf[8];
    for (int i = 0; i < 8; ++i) lenbuf[i] = static_cast<char>((hlen >> (8 * i)) & 0xff);
    out.write(lenbuf, 8);
    out.write(htext.data(), static_cast<std::streamsize>(htext.size()));
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) fail_data("write failed: " + path.string());
}

std::pair<json, std::vector<char>> read_container(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_data("cannot open model file " + path.string());
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) fail_data("not a TUNW v1 model file: " + path.string());
    char lenbuf[8];
    in.read(lenbuf, 8);
    if (!in) fail_data("truncated model file " + path.string());
    std::uint64_t hlen = 0;
    for (int i = 0; i < 8; ++i) hlen |= static_cast<std::uint64_t>(static_cast<unsigned char>(lenbuf[i])) << (8 * i);
    std::string htext(hlen, '\0');
    in.read(htext.data(), static_cast<std::streamsize>(hlen));
    if (!in) fail_data("truncated model header " + path.string());
    json header;
    try {
        header = json::parse(htext);
    } catch (const json::exception& e) {
        fail_data(std::string("bad model header: ") + e.what());
    }
    std::vector<char> payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return {std::move(header), std::move(payload)};
}

NormStats norm_stats_from_json(const json& j) {
    NormStats s;
    s.mean = j.at("mean").get<std::vector<float>>();
    s.stddev = j.at("stddev").get<std::vector<float>>();
    return s;
}

}  // namespace

void save_model(const fs::path& path, UNetModel& model) {
    json header = header_common(model.config, model.norm_stats);
    header["payload"] = "float32";

    json manifest = json::array();
    std::vector<char> payload;
    std::uint64_t offset = 0;  // in floats
    for (const ParamRef& r : param_refs(model)) {
        manifest.push_back({{"name", r.name},
                            {"shape", r.shape.empty() ? std::vector<int>{static_cast<int>(r.size)} : r.shape},
                            {"offset", offset},
                            {"size", r.size},
                            {"trainable", r.trainable}});
        const std::size_t bytes = r.size * sizeof(float);
        const std::size_t old = payload.size();
        payload.resize(old + bytes);
        std::memcpy(payload.data() + old, r.data, bytes);
        offset += r.size;
    }
    header["params"] = manifest;
    write_container(path, header, payload);
}

UNetModel load_model(const fs::path& path) {
    auto [header, payload] = read_container(path);
    if (header.value("payload", "") != "float32") fail_data("model file does not carry float parameters");
    UNetModel model = build_model(config_from_json(header.at("config")), 0);
    model.norm_stats = norm_stats_from_json(header.at("norm_stats"));

    std::vector<ParamRef> refs = param_refs(model);
    const json& manifest = header.at("params");
    if (manifest.size() != refs.size()) fail_data("model manifest does not match architecture");
    for (std::size_t i = 0; i < refs.size(); ++i) {
        const json& m = manifest[i];
        if (m.at("name") != refs[i].name || m.at("size") != refs[i].size) {
            fail_data("model manifest mismatch at " + refs[i].name);
        }
        const std::uint64_t offset = m.at("offset");
        const std::size_t bytes = refs[i].size * sizeof(float);
        if ((offset * sizeof(float)) + bytes > payload.size()) fail_data("model payload truncated");
        std::memcpy(refs[i].data, payload.data() + offset * sizeof(float), bytes);
    }
    return model;
}

void save_quantized_model(const fs::path& path, const QuantizedModel& qmodel) {
    json header = header_common(qmodel.config, qmodel.norm_stats);
    header["payload"] = "quant8";

    json qblock;
    json tensors = json::array();
    std::vector<char> payload;
    std::uint64_t offset = 0;  // bytes into the uint8 payload
    for (const QuantizedTensor& t : qmodel.tensors) {
        tensors.push_back({{"name", t.name},
                           {"shape", t.shape.empty() ? std::vector<int>{static_cast<int>(t.payload.size())} : t.shape},
                           {"scale", t.qp.scale},
                           {"zero_point", t.qp.zero_point},
                           {"offset", offset},
                           {"size", t.payload.size()}});
        payload.insert(payload.end(), t.payload.begin(), t.payload.end());
        offset += t.payload.size();
    }
    qblock["tensors"] = tensors;
    json stats;
    for (const auto& [name, values] : qmodel.running_stats) stats[name] = values;
    qblock["running_stats"] = stats;
    json ranges;
    for (const auto& [site, r] : qmodel.act_ranges) ranges[site] = {r.lo, r.hi};
    qblock["act_ranges"] = ranges;
    header["quant"] = qblock;
    write_container(path, header, payload);
}

QuantizedModel load_quantized_model(const fs::path& path) {
    auto [header, payload] = read_container(path);
    if (header.value("payload", "") != "quant8" || !header.contains("quant")) {
        fail_data("model file has no quantization block");
    }
    QuantizedModel q;
    q.config = config_from_json(header.at("config"));
    q.norm_stats = norm_stats_from_json(header.at("norm_stats"));
    const json& qblock = header.at("quant");
    for (const json& t : qblock.at("tensors")) {
        QuantizedTensor qt;
        qt.name = t.at("name");
        qt.shape = t.at("shape").get<std::vector<int>>();
        qt.qp.scale = t.at("scale");
        qt.qp.zero_point = t.at("zero_point");
        const std::uint64_t offset = t.at("offset");
        const std::size_t size = t.at("size");
        if (offset + size > payload.size()) fail_data("quantized payload truncated");
        qt.payload.assign(payload.begin() + static_cast<std::ptrdiff_t>(offset),
                          payload.begin() + static_cast<std::ptrdiff_t>(offset + size));
        q.tensors.push_back(std::move(qt));
    }
    for (const auto& [name, values] : qblock.at("running_stats").items()) {
        q.running_stats[name] = values.get<std::vector<float>>();
    }
    for (const auto& [site, r] : qblock.at("act_ranges").items()) {
        q.act_ranges[site] = {r.at(0).get<float>(), r.at(1).get<float>()};
    }
    return q;
}

bool model_file_is_quantized(const fs::path& path) {
    auto [header, payload] = read_container(path);
    (void)payload;
    return header.value("payload", "") == "quant8";
}

}  // namespace tinyunet
