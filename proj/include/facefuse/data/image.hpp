#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "facefuse/engine/tensor.hpp"

namespace facefuse {

/// Binary PGM (P5) -> [1,H,W], PPM (P6) -> [3,H,W]; values scaled to [0,1]
/// by maxval. IngestionError on malformed headers or short payloads.
Tensor<double> decode_image(std::span<const std::uint8_t> bytes);
Tensor<double> decode_image(const std::filesystem::path& path);

/// Inverse of decode_image at maxval 255: values are clamped to [0,1] and
/// rounded to the nearest 8-bit level.
std::vector<std::uint8_t> encode_image(const Tensor<double>& image);
void write_image(const Tensor<double>& image, const std::filesystem::path& path);

/// Per-image mean subtraction followed by division by 0.5.
template <class Real>
Tensor<Real> normalize_image(const Tensor<double>& image);

}  // namespace facefuse
