#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "facefuse/train/trainer.hpp"

namespace facefuse {

/// Checkpoint layout (all integers little-endian):
///   "FFCK" | u32 version | u32 len + spec text | u8 bytes-per-element
///   | u64 iteration | u32 len + rng state | u32 len + config echo
///   | u32 layer count | per layer: u8 kind, weights, bias
///   | u32 CRC-32 of everything before it.
/// A tensor is u32 rank, rank x u32 extents, then the elements.
inline constexpr std::uint32_t kCheckpointVersion = 1;

template <class Real>
std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint<Real>& checkpoint);

/// CheckpointError on bad magic, version, checksum, truncation, precision
/// mismatch, or parameters that disagree with the stored spec.
template <class Real>
Checkpoint<Real> deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

template <class Real>
void save_checkpoint(const Checkpoint<Real>& checkpoint, const std::filesystem::path& path);

template <class Real>
void save_checkpoint(const Network<Real>& network, const std::filesystem::path& path) {
    save_checkpoint(Checkpoint<Real>{network, 0, {}, {}}, path);
}

template <class Real>
Checkpoint<Real> load_checkpoint(const std::filesystem::path& path);

/// Precision recorded in a checkpoint file header.
Precision checkpoint_precision(const std::filesystem::path& path);

}  // namespace facefuse
