#pragma once

#include <filesystem>

#include "tinyunet/quantize.hpp"
#include "tinyunet/unet.hpp"

namespace tinyunet {

// "TUNW v1" container: 8 magic bytes, little-endian u64 header length, a
// JSON text header (config, channel schedule, parameter manifest with
// names/shapes/offsets, norm stats, optional quantization block), then the
// payload. Float models carry raw little-endian f32 data in manifest order;
// quantized models carry the uint8 payloads instead.
void save_model(const std::filesystem::path& path, UNetModel& model);
UNetModel load_model(const std::filesystem::path& path);

void save_quantized_model(const std::filesystem::path& path, const QuantizedModel& qmodel);
QuantizedModel load_quantized_model(const std::filesystem::path& path);

// Inspects the header without loading payloads.
bool model_file_is_quantized(const std::filesystem::path& path);

}  // namespace tinyunet
