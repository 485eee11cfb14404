#include "facefuse/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "facefuse/data/image.hpp"
#include "facefuse/error.hpp"
#include "facefuse/parallel.hpp"
#include "facefuse/rng.hpp"

namespace facefuse {

LabelMaps LabelMaps::defaults() {
    return LabelMaps{
        {{"young", 0}, {"adult", 1}, {"old", 2}},
        {{"asian", 0}, {"latin", 1}, {"african", 2}, {"white", 3}},
        {{"male", 0}, {"female", 1}},
    };
}

std::size_t Manifest::id_count() const {
    int top = -1;
    for (const Sample& s : records) top = std::max(top, s.labels.id);
    return static_cast<std::size_t>(top + 1);
}

namespace {

using nlohmann::json;

int read_label(const json& record, const char* key, int classes, const std::map<std::string, int>* map,
               const std::string& where) {
    if (!record.contains(key)) throw IngestionError(where + ": missing key '" + key + "'");
    const json& value = record.at(key);
    long long index = -1;
    if (value.is_number_integer()) {
        index = value.get<long long>();
    } else if (value.is_string() && map != nullptr) {
        const auto found = map->find(value.get<std::string>());
        if (found == map->end()) {
            throw IngestionError(where + ": " + key + "=\"" + value.get<std::string>() + "\" has no label-map entry");
        }
        index = found->second;
    } else {
        throw IngestionError(where + ": " + key + " must be a non-negative integer");
    }
    if (index < 0 || (classes > 0 && index >= classes)) {
        throw IngestionError(where + ": " + key + "=" + std::to_string(index) + " out of range" +
                             (classes > 0 ? " [0," + std::to_string(classes) + ")" : std::string()));
    }
    return static_cast<int>(index);
}

}  // namespace

Manifest load_manifest(const std::filesystem::path& path, const LabelMaps& maps) {
    std::ifstream in(path);
    if (!in) throw IngestionError("cannot open manifest " + path.string());
    const std::filesystem::path base = path.parent_path();
    Manifest manifest;
    manifest.label_maps = maps;
    std::set<std::string> seen_paths;
    std::string line;
    for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = path.string() + ":" + std::to_string(line_no);
        json record;
        try {
            record = json::parse(line);
        } catch (const json::parse_error& e) {
            throw IngestionError(where + ": invalid JSON: " + e.what());
        }
        if (!record.is_object()) throw IngestionError(where + ": expected a JSON object");
        if (!record.contains("path") || !record.at("path").is_string()) {
            throw IngestionError(where + ": missing key 'path'");
        }
        Sample sample;
        sample.path = record.at("path").get<std::string>();
        sample.labels.id = read_label(record, "id", 0, nullptr, where);
        sample.labels.age = read_label(record, "age", kAgeClasses, &maps.age, where);
        sample.labels.race = read_label(record, "race", kRaceClasses, &maps.race, where);
        sample.labels.gender = read_label(record, "gender", kGenderClasses, &maps.gender, where);
        sample.source_key = sample.path;
        if (record.contains("source_key")) {
            if (!record.at("source_key").is_string()) throw IngestionError(where + ": source_key must be a string");
            sample.source_key = record.at("source_key").get<std::string>();
        }
        if (!seen_paths.insert(sample.path).second) {
            throw IngestionError(where + ": duplicate path '" + sample.path + "'");
        }
        std::filesystem::path resolved = sample.path;
        if (resolved.is_relative()) resolved = base / resolved;
        if (!std::ifstream(resolved, std::ios::binary)) {
            throw IngestionError(where + ": unreadable image path '" + sample.path + "'");
        }
        // ref and source_key stay as written so they do not depend on where the
        // manifest lives.
        sample.ref = sample.path;
        sample.path = resolved.lexically_normal().string();
        manifest.records.push_back(std::move(sample));
    }
    if (manifest.records.empty()) throw IngestionError(path.string() + ": manifest has no records");
    std::vector<bool> present(manifest.id_count(), false);
    for (const Sample& s : manifest.records) present[static_cast<std::size_t>(s.labels.id)] = true;
    for (std::size_t id = 0; id < present.size(); ++id) {
        if (!present[id]) {
            throw IngestionError(path.string() + ": id class " + std::to_string(id) +
                                 " has no records (ids must be dense from 0)");
        }
    }
    return manifest;
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write manifest " + path.string());
    const std::filesystem::path base = path.parent_path();
    for (const Sample& s : manifest.records) {
        std::filesystem::path p = s.path;
        if (p.is_absolute() && !base.empty()) p = p.lexically_relative(base);
        nlohmann::ordered_json record;
        record["path"] = p.generic_string();
        record["id"] = s.labels.id;
        record["age"] = s.labels.age;
        record["race"] = s.labels.race;
        record["gender"] = s.labels.gender;
        if (s.source_key != p.generic_string()) record["source_key"] = s.source_key;
        out << record.dump() << "\n";
    }
    if (!out) throw IoError("failed writing manifest " + path.string());
}

namespace {

double sample_clamped(const Tensor<double>& img, std::size_t c, double y, double x) {
    const double max_y = static_cast<double>(img.dim(1) - 1);
    const double max_x = static_cast<double>(img.dim(2) - 1);
    y = std::clamp(y, 0.0, max_y);
    x = std::clamp(x, 0.0, max_x);
    const auto y0 = static_cast<std::size_t>(std::floor(y));
    const auto x0 = static_cast<std::size_t>(std::floor(x));
    const std::size_t y1 = std::min(y0 + 1, img.dim(1) - 1);
    const std::size_t x1 = std::min(x0 + 1, img.dim(2) - 1);
    const double fy = y - static_cast<double>(y0);
    const double fx = x - static_cast<double>(x0);
    const double top = img.at(c, y0, x0) * (1 - fx) + img.at(c, y0, x1) * fx;
    const double bottom = img.at(c, y1, x0) * (1 - fx) + img.at(c, y1, x1) * fx;
    return top * (1 - fy) + bottom * fy;
}

struct AffineDraw {
    double angle, scale, shift_x, shift_y;
    bool flip;
};

Tensor<double> warp(const Tensor<double>& img, const AffineDraw& a) {
    const std::size_t height = img.dim(1), width = img.dim(2);
    const double cy = (static_cast<double>(height) - 1) / 2;
    const double cx = (static_cast<double>(width) - 1) / 2;
    const double cos_a = std::cos(a.angle), sin_a = std::sin(a.angle);
    Tensor<double> out(img.shape());
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            // Inverse map: undo translation, scale, then rotation about the centre.
            const double dx = (static_cast<double>(x) - cx - a.shift_x) / a.scale;
            const double dy = (static_cast<double>(y) - cy - a.shift_y) / a.scale;
            double sx = cos_a * dx + sin_a * dy + cx;
            const double sy = -sin_a * dx + cos_a * dy + cy;
            if (a.flip) sx = static_cast<double>(width) - 1 - sx;
            for (std::size_t c = 0; c < img.dim(0); ++c) out.at(c, y, x) = sample_clamped(img, c, sy, sx);
        }
    }
    return out;
}

Tensor<double> gaussian_blur(const Tensor<double>& img, double sigma) {
    const auto radius = static_cast<std::ptrdiff_t>(std::ceil(2 * sigma));
    std::vector<double> kernel;
    double total = 0;
    for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
        kernel.push_back(std::exp(-static_cast<double>(i * i) / (2 * sigma * sigma)));
        total += kernel.back();
    }
    for (double& k : kernel) k /= total;
    const auto height = static_cast<std::ptrdiff_t>(img.dim(1));
    const auto width = static_cast<std::ptrdiff_t>(img.dim(2));
    auto clamp_index = [](std::ptrdiff_t v, std::ptrdiff_t n) { return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(v, 0, n - 1)); };
    Tensor<double> horizontal(img.shape());
    Tensor<double> out(img.shape());
    for (std::size_t c = 0; c < img.dim(0); ++c) {
        for (std::ptrdiff_t y = 0; y < height; ++y) {
            for (std::ptrdiff_t x = 0; x < width; ++x) {
                double acc = 0;
                for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
                    acc += kernel[static_cast<std::size_t>(i + radius)] *
                           img.at(c, static_cast<std::size_t>(y), clamp_index(x + i, width));
                }
                horizontal.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = acc;
            }
        }
        for (std::ptrdiff_t y = 0; y < height; ++y) {
            for (std::ptrdiff_t x = 0; x < width; ++x) {
                double acc = 0;
                for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
                    acc += kernel[static_cast<std::size_t>(i + radius)] *
                           horizontal.at(c, clamp_index(y + i, height), static_cast<std::size_t>(x));
                }
                out.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = acc;
            }
        }
    }
    return out;
}

Tensor<double> augmented_variant(const Tensor<double>& original, Rng& rng) {
    constexpr double kMaxAngle = 10.0 * std::numbers::pi / 180.0;
    AffineDraw affine;
    affine.angle = rng.uniform(-kMaxAngle, kMaxAngle);
    affine.scale = rng.uniform(0.9, 1.1);
    affine.shift_x = rng.uniform(-0.1, 0.1) * static_cast<double>(original.dim(2));
    affine.shift_y = rng.uniform(-0.1, 0.1) * static_cast<double>(original.dim(1));
    affine.flip = rng.coin();
    const bool blur = rng.coin();
    const double sigma = rng.uniform(0.3, 1.0);
    const double brightness = rng.uniform(-0.1, 0.1);
    const double contrast = rng.uniform(0.9, 1.1);

    Tensor<double> out = warp(original, affine);
    if (blur) out = gaussian_blur(out, sigma);
    for (double& v : out.data()) v = std::clamp((v - 0.5) * contrast + 0.5 + brightness, 0.0, 1.0);
    return out;
}

}  // namespace

std::vector<Sample> augment(const Sample& sample, const AugmentSpec& spec) {
    if (spec.factor == 0) throw ConfigError("augmentation factor must be at least 1");
    Sample original = sample;
    if (!original.image) original.image = decode_image(std::filesystem::path(sample.path));
    const std::string base_ref = sample.ref.empty() ? sample.path : sample.ref;
    original.ref = base_ref + "#0";

    Rng rng(mix_seed(spec.seed, hash_string(sample.source_key)));
    std::vector<Sample> variants;
    variants.reserve(spec.factor);
    variants.push_back(original);
    for (std::size_t k = 1; k < spec.factor; ++k) {
        Sample variant = original;
        variant.ref = base_ref + "#" + std::to_string(k);
        variant.image = augmented_variant(*original.image, rng);
        variants.push_back(std::move(variant));
    }
    return variants;
}

Split split(std::vector<Sample> samples, double train_fraction, std::uint64_t seed, bool group_by_source) {
    if (samples.empty()) throw ConfigError("split: no samples");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ConfigError("split: train fraction must lie strictly between 0 and 1");
    }
    // Unit of assignment: a source group, or each sample on its own.
    std::vector<std::size_t> unit_of(samples.size());
    std::size_t units = 0;
    if (group_by_source) {
        std::unordered_map<std::string, std::size_t> index;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const auto [it, inserted] = index.try_emplace(samples[i].source_key, units);
            if (inserted) ++units;
            unit_of[i] = it->second;
        }
    } else {
        for (std::size_t i = 0; i < samples.size(); ++i) unit_of[i] = i;
        units = samples.size();
    }

    std::vector<std::size_t> order(units);
    for (std::size_t i = 0; i < units; ++i) order[i] = i;
    Rng rng(seed);
    for (std::size_t i = units; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    std::size_t train_units = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(units)));
    if (units >= 2) train_units = std::clamp<std::size_t>(train_units, 1, units - 1);
    std::vector<bool> in_train(units, false);
    for (std::size_t i = 0; i < train_units; ++i) in_train[order[i]] = true;

    Split out;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        (in_train[unit_of[i]] ? out.train : out.test).push_back(std::move(samples[i]));
    }
    return out;
}

Dataset load_dataset(const DataConfig& config) {
    Dataset dataset;
    dataset.manifest = load_manifest(config.manifest);
    const std::vector<Sample>& records = dataset.manifest.records;
    std::vector<std::vector<Sample>> expanded(records.size());
    parallel_for(records.size(), [&](std::size_t i) { expanded[i] = augment(records[i], config.augment); });

    std::vector<Sample> all;
    all.reserve(records.size() * config.augment.factor);
    for (auto& group : expanded) {
        for (Sample& s : group) {
            if (dataset.image_shape.empty()) dataset.image_shape = s.image->shape();
            if (s.image->shape() != dataset.image_shape) {
                throw IngestionError(s.path + ": image shape " + to_string(s.image->shape()) +
                                     " differs from " + to_string(dataset.image_shape));
            }
            all.push_back(std::move(s));
        }
    }
    dataset.split = split(std::move(all), config.train_fraction, config.split_seed, config.group_by_source);
    return dataset;
}

template <class Real>
std::vector<Example<Real>> to_examples(const std::vector<Sample>& samples) {
    std::vector<Example<Real>> out(samples.size());
    parallel_for(samples.size(), [&](std::size_t i) {
        const Sample& s = samples[i];
        Tensor<double> image = s.image ? *s.image : decode_image(std::filesystem::path(s.path));
        out[i] = Example<Real>{s.ref, s.labels, normalize_image<Real>(image)};
    });
    return out;
}

template std::vector<Example<float>> to_examples(const std::vector<Sample>&);
template std::vector<Example<double>> to_examples(const std::vector<Sample>&);

}  // namespace facefuse
