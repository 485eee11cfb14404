#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>

#include "facefuse/data/dataset.hpp"

namespace facefuse {

/// Synthetic stand-in for a face dataset: 2 genders x 3 ages x 4 races = 24
/// subgroups, `ids_per_subgroup` identities in each.
struct SynthConfig {
    std::size_t ids_per_subgroup = 1;
    std::size_t images_per_id = 50;
    std::size_t resolution = 32;
    double noise = 0.05;
    std::uint64_t seed = 7;
};

inline constexpr std::size_t kSubgroups = 2 * 3 * 4;

/// (gender, age, race) of identity `id`; ids are numbered subgroup-major.
Labels synth_labels(const SynthConfig& config, std::size_t id);

/// Renders image `index` of identity `id` as [1,R,R] in [0,1]. Race sets the
/// background band, age the face ellipse shape, gender a corner glyph, and
/// the identity a mirror-symmetric texture patch inside the face. Per image
/// the face is shifted and its axes scaled independently, the background
/// is offset far enough to overlap neighbouring race bands, the glyph is
/// absent 30% of the time and the texture 10% of the time, and additive
/// noise is applied.
Tensor<double> synth_render(const SynthConfig& config, std::size_t id, std::size_t index);

/// Writes `out_dir`/images/*.pgm and `out_dir`/manifest.jsonl; returns the
/// manifest. A pure function of `config`.
Manifest synth_generate(const SynthConfig& config, const std::filesystem::path& out_dir);

}  // namespace facefuse
