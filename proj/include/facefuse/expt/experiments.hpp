#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "facefuse/data/dataset.hpp"
#include "facefuse/expt/feature_set.hpp"
#include "facefuse/model/network.hpp"
#include "facefuse/train/trainer.hpp"

namespace facefuse {

/// One row per example holding the backbone's feature-tap activation.
template <class Real>
FeatureSet extract_features(const Network<Real>& backbone, std::span<const Example<Real>> examples, Task source,
                            std::string split);

/// Per-sample concatenation in canonical task order (id, age, race, gender),
/// rows following the first set in that order. AlignmentError when the sets
/// disagree on split, sample coverage, labels, or share a source task.
FeatureSet concat_features(std::span<const FeatureSet> sets);

/// Per-dimension standardization with statistics from `train`, applied to
/// both sets in place. Constant dimensions are only centred.
void standardize(FeatureSet& train, FeatureSet& test);

/// Fraction of rows carrying the most frequent `task` label.
double majority_baseline(const FeatureSet& set, Task task);

struct HeadConfig {
    TrainConfig train = default_train();
    HeadOptions layers;
    std::uint64_t seed = 1;
    bool normalize = false;

    static TrainConfig default_train() {
        TrainConfig config;
        config.iterations = 5000;
        return config;
    }
};

/// Extracted train/test features of the four backbones, indexed by task.
struct TaskFeatures {
    std::array<FeatureSet, 4> train;
    std::array<FeatureSet, 4> test;
    /// Class count per target task.
    std::array<std::size_t, 4> classes{};
};

template <class Real>
TaskFeatures extract_all(std::span<const Network<Real>, 4> backbones, std::span<const Example<Real>> train_set,
                         std::span<const Example<Real>> test_set, std::size_t id_classes);

/// A head trained on one feature combination for one target.
struct HeadRun {
    std::vector<Task> sources;
    Task target = Task::id;
    std::size_t input_dim = 0;
    double accuracy = 0;
    std::vector<MetricsRow> metrics;
};

/// "id+age->gender". Seeds derive from it, so a combination always gets the
/// same head initialization and batch order whichever experiment asks.
std::string cell_id(std::span<const Task> sources, Task target);
std::uint64_t cell_seed(std::uint64_t seed, std::span<const Task> sources, Task target);

HeadRun run_head(const TaskFeatures& features, std::span<const Task> sources, Task target, const HeadConfig& config);

struct CrossTaskMatrix {
    /// cells[source][target]
    std::array<std::array<HeadRun, 4>, 4> cells;
    std::array<std::size_t, 4> dims{};
    std::array<double, 4> baseline{};

    double accuracy(Task source, Task target) const;
};

CrossTaskMatrix run_cross_task_matrix(const TaskFeatures& features, const HeadConfig& config);

enum class FusionKind { own, other_three, all };

inline constexpr std::array<FusionKind, 3> kFusionKinds{FusionKind::own, FusionKind::other_three, FusionKind::all};

std::string_view to_string(FusionKind kind);
/// "Own", "Other three", "All".
std::string_view display_name(FusionKind kind);
std::vector<Task> fusion_sources(FusionKind kind, Task target);

struct FusionReport {
    /// runs[kind][target]
    std::array<std::array<HeadRun, 4>, 3> runs;

    double accuracy(FusionKind kind, Task target) const;
    /// all - own
    double margin(Task target) const;
};

FusionReport run_fusion_study(const TaskFeatures& features, const HeadConfig& config);

/// Published all - own reference margins, in points (ID, age, race, gender).
inline constexpr std::array<double, 4> kReferenceMargins{7.2, 20.1, 22.2, 21.8};

}  // namespace facefuse
