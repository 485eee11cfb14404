#include "facefuse/data/synth.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <vector>

#include "facefuse/data/image.hpp"
#include "facefuse/error.hpp"
#include "facefuse/rng.hpp"

namespace facefuse {
namespace {

constexpr double kBackground[kRaceClasses] = {0.10, 0.28, 0.46, 0.64};
constexpr double kFace = 0.85;
constexpr double kTexture = 0.35;
constexpr double kGlyph = 1.0;

// Per-image cue ambiguity. Background offsets overlap neighbouring race
// bands, independent axis scaling blurs the age shapes, and the glyph and
// texture are sometimes missing.
constexpr double kBackgroundJitter = 0.15;
constexpr double kAxisJitter = 0.15;
constexpr double kGlyphShown = 0.7;
constexpr double kTextureShown = 0.9;

// Face semi-axes (x, y) as fractions of the resolution, by age.
constexpr double kAxes[kAgeClasses][2] = {{0.26, 0.26}, {0.30, 0.36}, {0.22, 0.42}};

// Identity texture: 5 rows x 6 columns, mirrored about the vertical axis so
// horizontal flips keep it intact; 15 free bits.
constexpr std::size_t kPatternRows = 5;
constexpr std::size_t kPatternHalf = 3;

std::uint32_t pattern_bits(const SynthConfig& config, std::size_t id) {
    // Deterministic sequence; each identity's pattern differs from every
    // earlier one in at least 3 bits.
    static constexpr std::uint32_t kMask = (1u << (kPatternRows * kPatternHalf)) - 1;
    std::vector<std::uint32_t> chosen;
    Rng rng(mix_seed(config.seed, 0x7e87u));
    while (chosen.size() <= id) {
        const std::uint32_t candidate = static_cast<std::uint32_t>(rng.next()) & kMask;
        const bool distinct = std::all_of(chosen.begin(), chosen.end(), [&](std::uint32_t other) {
            return std::popcount(candidate ^ other) >= 3;
        });
        if (distinct || chosen.size() >= (1u << 12)) chosen.push_back(candidate);
    }
    return chosen[id];
}

bool pattern_on(std::uint32_t bits, std::size_t row, std::size_t col) {
    const std::size_t half_col = col < kPatternHalf ? col : 2 * kPatternHalf - 1 - col;
    return ((bits >> (row * kPatternHalf + half_col)) & 1u) != 0;
}

bool glyph_on(int gender, std::size_t gy, std::size_t gx, std::size_t size) {
    if (gender == 0) return gy == gx || gy + gx == size - 1;          // X
    return gy == 0 || gx == 0 || gy == size - 1 || gx == size - 1;    // hollow square
}

}  // namespace

Labels synth_labels(const SynthConfig& config, std::size_t id) {
    if (config.ids_per_subgroup == 0) throw ConfigError("synth: ids_per_subgroup must be positive");
    const std::size_t subgroup = id / config.ids_per_subgroup;
    if (subgroup >= kSubgroups) throw ConfigError("synth: id " + std::to_string(id) + " out of range");
    Labels labels;
    labels.id = static_cast<int>(id);
    labels.gender = static_cast<int>(subgroup / (kAgeClasses * kRaceClasses));
    labels.age = static_cast<int>((subgroup / kRaceClasses) % kAgeClasses);
    labels.race = static_cast<int>(subgroup % kRaceClasses);
    return labels;
}

Tensor<double> synth_render(const SynthConfig& config, std::size_t id, std::size_t index) {
    if (config.resolution < 16) throw ConfigError("synth: resolution must be at least 16");
    const Labels labels = synth_labels(config, id);
    const double res = static_cast<double>(config.resolution);
    Rng rng(mix_seed(mix_seed(config.seed, id), index));

    // Pose and cue jitter.
    const double cx = res / 2 + rng.uniform(-res / 16, res / 16);
    const double cy = res / 2 + rng.uniform(-res / 16, res / 16);
    const double ax = kAxes[labels.age][0] * res * rng.uniform(1 - kAxisJitter, 1 + kAxisJitter);
    const double ay = kAxes[labels.age][1] * res * rng.uniform(1 - kAxisJitter, 1 + kAxisJitter);
    const double background = kBackground[labels.race] + rng.uniform(-kBackgroundJitter, kBackgroundJitter);
    const bool glyph = rng.coin(kGlyphShown);
    const bool texture = rng.coin(kTextureShown);

    const std::uint32_t bits = pattern_bits(config, id);
    const double cell = res / 16;
    const double patch_w = cell * 2 * kPatternHalf;
    const double patch_h = cell * kPatternRows;

    const std::size_t glyph_size = std::max<std::size_t>(5, config.resolution * 6 / 32);
    const std::size_t glyph_origin = std::max<std::size_t>(1, config.resolution / 32);

    Tensor<double> image(Shape{1, config.resolution, config.resolution});
    for (std::size_t y = 0; y < config.resolution; ++y) {
        for (std::size_t x = 0; x < config.resolution; ++x) {
            const double px = static_cast<double>(x) + 0.5;
            const double py = static_cast<double>(y) + 0.5;
            double value = background;
            const double ex = (px - cx) / ax;
            const double ey = (py - cy) / ay;
            if (ex * ex + ey * ey <= 1.0) {
                value = kFace;
                const double tx = px - (cx - patch_w / 2);
                const double ty = py - (cy - patch_h / 2);
                if (texture && tx >= 0 && ty >= 0 && tx < patch_w && ty < patch_h) {
                    const auto col = static_cast<std::size_t>(tx / cell);
                    const auto row = static_cast<std::size_t>(ty / cell);
                    if (pattern_on(bits, row, col)) value = kTexture;
                }
            }
            if (glyph && y >= glyph_origin && x >= glyph_origin && y < glyph_origin + glyph_size &&
                x < glyph_origin + glyph_size &&
                glyph_on(labels.gender, y - glyph_origin, x - glyph_origin, glyph_size)) {
                value = kGlyph;
            }
            image.at(0, y, x) = value;
        }
    }
    if (config.noise > 0) {
        for (double& v : image.data()) v = std::clamp(v + config.noise * rng.normal(), 0.0, 1.0);
    }
    return image;
}

Manifest synth_generate(const SynthConfig& config, const std::filesystem::path& out_dir) {
    if (config.ids_per_subgroup == 0 || config.images_per_id == 0) {
        throw ConfigError("synth: ids_per_subgroup and images_per_id must be positive");
    }
    std::error_code ec;
    std::filesystem::create_directories(out_dir / "images", ec);
    if (ec) throw IoError("cannot create " + (out_dir / "images").string() + ": " + ec.message());

    Manifest manifest;
    manifest.label_maps = LabelMaps::defaults();
    const std::size_t ids = kSubgroups * config.ids_per_subgroup;
    for (std::size_t id = 0; id < ids; ++id) {
        for (std::size_t index = 0; index < config.images_per_id; ++index) {
            char name[64];
            std::snprintf(name, sizeof name, "images/id%03zu_%04zu.pgm", id, index);
            write_image(synth_render(config, id, index), out_dir / name);
            Sample sample;
            sample.path = name;
            sample.source_key = name;
            sample.ref = name;
            sample.labels = synth_labels(config, id);
            manifest.records.push_back(std::move(sample));
        }
    }
    write_manifest(manifest, out_dir / "manifest.jsonl");
    return manifest;
}

}  // namespace facefuse
