#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "facefuse/engine/tensor.hpp"
#include "facefuse/task.hpp"

namespace facefuse {

/// One image with its four labels. Augmented variants keep the source_key of
/// their origin and get a distinct `ref`.
struct Sample {
    std::string path;
    std::string source_key;
    std::string ref;
    Labels labels;
    std::optional<Tensor<double>> image;
};

/// String-to-index maps for the attribute labels that may appear as strings.
struct LabelMaps {
    std::map<std::string, int> age;
    std::map<std::string, int> race;
    std::map<std::string, int> gender;

    /// young/adult/old, asian/latin/african/white, male/female.
    static LabelMaps defaults();
};

struct Manifest {
    std::vector<Sample> records;
    LabelMaps label_maps;

    /// Number of identity classes (ids are dense in [0, id_count)).
    std::size_t id_count() const;
};

/// One JSON object per line: path, id, age, race, gender and an optional
/// source_key (defaults to path). Relative paths resolve against the
/// manifest's directory. IngestionError (with line number) on a missing key,
/// out-of-range or unmapped label, unreadable image, or an id class with no
/// records.
Manifest load_manifest(const std::filesystem::path& path, const LabelMaps& maps = LabelMaps::defaults());

/// Writes records with paths relative to the manifest's directory when possible.
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

struct AugmentSpec {
    std::size_t factor = 10;
    std::uint64_t seed = 0;
};

/// `factor` variants of `sample`: element 0 is the original, the rest apply a
/// random affine warp (rotation <= 10 deg, translation <= 10%, scale 0.9-1.1,
/// horizontal flip) and photometric filters (Gaussian blur, brightness and
/// contrast jitter) drawn from an RNG seeded by (spec.seed, source_key).
/// Decodes sample.path when no inline image is present.
std::vector<Sample> augment(const Sample& sample, const AugmentSpec& spec);

struct Split {
    std::vector<Sample> train;
    std::vector<Sample> test;
};

/// Seeded partition. Grouped mode assigns whole source_key groups and applies
/// the fraction to groups; otherwise it applies to individual samples. Each
/// partition keeps input order.
Split split(std::vector<Sample> samples, double train_fraction, std::uint64_t seed, bool group_by_source = true);

/// Everything that determines the train/test sets a model sees.
struct DataConfig {
    std::filesystem::path manifest;
    AugmentSpec augment{10, 0};
    double train_fraction = 0.7;
    std::uint64_t split_seed = 0;
    bool group_by_source = true;
};

struct Dataset {
    Manifest manifest;
    Split split;
    Shape image_shape;
};

/// load_manifest -> decode -> augment -> split. All images must share one shape.
Dataset load_dataset(const DataConfig& config);

template <class Real>
struct Example {
    std::string ref;
    Labels labels;
    Tensor<Real> input;
};

/// Normalized network inputs (see normalize_image).
template <class Real>
std::vector<Example<Real>> to_examples(const std::vector<Sample>& samples);

}  // namespace facefuse
