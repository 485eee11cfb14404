#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "facefuse/task.hpp"

namespace facefuse {

struct FeatureRow {
    std::string ref;
    Labels labels;
    std::vector<double> values;

    friend bool operator==(const FeatureRow&, const FeatureRow&) = default;
};

/// High-level feature vectors for one split, tagged with the task(s) whose
/// backbone produced them (several after concatenation, in canonical order).
struct FeatureSet {
    std::vector<Task> sources;
    std::size_t dim = 0;
    std::string split;
    std::vector<FeatureRow> rows;

    /// "id", or "id+age+race+gender" for a fused set.
    std::string task_tag() const;
    /// Throws DimensionError if a row's length differs from dim.
    void validate() const;

    friend bool operator==(const FeatureSet&, const FeatureSet&) = default;
};

/// Header line `task=<tag> dim=<d> split=<s> count=<n>`, then one
/// tab-separated line per row: ref, id, age, race, gender, dim values in
/// shortest round-trip decimal form.
void write_feature_set(const FeatureSet& set, const std::filesystem::path& path);
FeatureSet read_feature_set(const std::filesystem::path& path);

}  // namespace facefuse
