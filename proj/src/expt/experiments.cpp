#include "facefuse/expt/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <unordered_map>

#include "facefuse/error.hpp"
#include "facefuse/parallel.hpp"
#include "facefuse/rng.hpp"

namespace facefuse {

template <class Real>
FeatureSet extract_features(const Network<Real>& backbone, std::span<const Example<Real>> examples, Task source,
                            std::string split) {
    FeatureSet set;
    set.sources = {source};
    set.dim = backbone.spec().feature_dim();
    set.split = std::move(split);
    set.rows.resize(examples.size());
    parallel_for(examples.size(), [&](std::size_t i) {
        const Tensor<Real> feature = forward_full(backbone, examples[i].input).feature;
        FeatureRow& row = set.rows[i];
        row.ref = examples[i].ref;
        row.labels = examples[i].labels;
        row.values.assign(feature.data().begin(), feature.data().end());
    });
    return set;
}

FeatureSet concat_features(std::span<const FeatureSet> sets) {
    if (sets.empty()) throw AlignmentError("concat_features: no feature sets");
    std::vector<const FeatureSet*> ordered;
    for (const FeatureSet& s : sets) {
        s.validate();
        ordered.push_back(&s);
    }
    auto first_source = [](const FeatureSet* s) {
        return s->sources.empty() ? 0 : static_cast<int>(s->sources.front());
    };
    std::stable_sort(ordered.begin(), ordered.end(),
                     [&](const FeatureSet* a, const FeatureSet* b) { return first_source(a) < first_source(b); });

    FeatureSet out;
    out.split = ordered.front()->split;
    std::vector<bool> seen(kAllTasks.size(), false);
    for (const FeatureSet* s : ordered) {
        if (s->split != out.split) {
            throw AlignmentError("cannot concatenate split '" + s->split + "' with '" + out.split + "'");
        }
        for (Task t : s->sources) {
            const auto k = static_cast<std::size_t>(t);
            if (seen[k]) throw AlignmentError("task " + std::string(to_string(t)) + " appears in two feature sets");
            seen[k] = true;
            out.sources.push_back(t);
        }
        out.dim += s->dim;
    }
    std::sort(out.sources.begin(), out.sources.end());

    const FeatureSet& base = *ordered.front();
    std::vector<std::vector<std::size_t>> index(ordered.size());
    for (std::size_t k = 0; k < ordered.size(); ++k) {
        const FeatureSet& s = *ordered[k];
        std::unordered_map<std::string, std::size_t> by_ref;
        for (std::size_t i = 0; i < s.rows.size(); ++i) by_ref.emplace(s.rows[i].ref, i);

        std::vector<std::string> missing;
        index[k].reserve(base.rows.size());
        for (const FeatureRow& row : base.rows) {
            const auto it = by_ref.find(row.ref);
            if (it == by_ref.end()) {
                missing.push_back(row.ref);
                continue;
            }
            if (s.rows[it->second].labels != row.labels) {
                throw AlignmentError("labels of " + row.ref + " differ between " + base.task_tag() + " and " +
                                     s.task_tag() + " features");
            }
            index[k].push_back(it->second);
        }
        if (s.rows.size() != base.rows.size() && missing.empty()) {
            // Extra rows in s: report those instead.
            std::unordered_map<std::string, bool> in_base;
            for (const FeatureRow& row : base.rows) in_base.emplace(row.ref, true);
            for (const FeatureRow& row : s.rows) {
                if (!in_base.contains(row.ref)) missing.push_back(row.ref);
            }
        }
        if (!missing.empty()) {
            std::string list;
            for (std::size_t i = 0; i < missing.size() && i < 10; ++i) list += (i ? ", " : "") + missing[i];
            if (missing.size() > 10) list += ", ... (" + std::to_string(missing.size()) + " total)";
            throw AlignmentError("feature sets " + base.task_tag() + " and " + s.task_tag() +
                                 " cover different samples; unmatched refs: " + list);
        }
    }

    out.rows.resize(base.rows.size());
    for (std::size_t i = 0; i < base.rows.size(); ++i) {
        FeatureRow& row = out.rows[i];
        row.ref = base.rows[i].ref;
        row.labels = base.rows[i].labels;
        row.values.reserve(out.dim);
        for (std::size_t k = 0; k < ordered.size(); ++k) {
            const std::vector<double>& part = ordered[k]->rows[index[k][i]].values;
            row.values.insert(row.values.end(), part.begin(), part.end());
        }
    }
    return out;
}

void standardize(FeatureSet& train, FeatureSet& test) {
    if (train.rows.empty()) return;
    const std::size_t dim = train.dim;
    std::vector<double> mean(dim, 0), var(dim, 0);
    for (const FeatureRow& row : train.rows)
        for (std::size_t j = 0; j < dim; ++j) mean[j] += row.values[j];
    const double n = static_cast<double>(train.rows.size());
    for (double& m : mean) m /= n;
    for (const FeatureRow& row : train.rows) {
        for (std::size_t j = 0; j < dim; ++j) {
            const double d = row.values[j] - mean[j];
            var[j] += d * d;
        }
    }
    std::vector<double> scale(dim, 1);
    for (std::size_t j = 0; j < dim; ++j) {
        const double sd = std::sqrt(var[j] / n);
        if (sd > 0) scale[j] = 1 / sd;
    }
    for (FeatureSet* set : {&train, &test}) {
        for (FeatureRow& row : set->rows)
            for (std::size_t j = 0; j < dim; ++j) row.values[j] = (row.values[j] - mean[j]) * scale[j];
    }
}

double majority_baseline(const FeatureSet& set, Task task) {
    if (set.rows.empty()) return 0;
    std::map<int, std::size_t> counts;
    for (const FeatureRow& row : set.rows) ++counts[row.labels.get(task)];
    std::size_t best = 0;
    for (const auto& [label, count] : counts) best = std::max(best, count);
    return static_cast<double>(best) / static_cast<double>(set.rows.size());
}

template <class Real>
TaskFeatures extract_all(std::span<const Network<Real>, 4> backbones, std::span<const Example<Real>> train_set,
                         std::span<const Example<Real>> test_set, std::size_t id_classes) {
    TaskFeatures out;
    for (Task t : kAllTasks) {
        const auto k = static_cast<std::size_t>(t);
        out.train[k] = extract_features(backbones[k], train_set, t, "train");
        out.test[k] = extract_features(backbones[k], test_set, t, "test");
        out.classes[k] = TaskDescriptor::defaults(t, id_classes).class_count;
    }
    return out;
}

std::string cell_id(std::span<const Task> sources, Task target) {
    std::string id;
    for (Task t : sources) id += (id.empty() ? "" : "+") + std::string(to_string(t));
    return id + "->" + std::string(to_string(target));
}

std::uint64_t cell_seed(std::uint64_t seed, std::span<const Task> sources, Task target) {
    return mix_seed(seed, hash_string(cell_id(sources, target)));
}

namespace {

// Re-throws the active exception with `context` prefixed, keeping its type.
[[noreturn]] void rethrow_with_context(const std::string& context) {
    try {
        throw;
    } catch (const DimensionError& e) {
        throw DimensionError(context + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError(context + e.what());
    } catch (const LabelError& e) {
        throw LabelError(context + e.what());
    } catch (const AlignmentError& e) {
        throw AlignmentError(context + e.what());
    } catch (const NumericError& e) {
        throw NumericError(context + e.what());
    } catch (const Error& e) {
        throw Error(context + e.what());
    }
}

template <class Real>
HeadRun train_cell(const FeatureSet& train_set, const FeatureSet& test_set, std::size_t classes, Task target,
                   std::uint64_t seed, const HeadConfig& config) {
    const std::vector<std::size_t> dims{train_set.dim};
    Network<Real> head = build_fusion_head<Real>(dims, classes, seed, config.layers);
    TrainConfig tc = config.train;
    tc.seed = mix_seed(seed, 1);
    TrainResult<Real> result = train_head(train_set, test_set, std::move(head), target, tc);
    HeadRun run;
    run.target = target;
    run.input_dim = train_set.dim;
    run.accuracy = evaluate(result.checkpoint.network, test_set, target);
    run.metrics = std::move(result.metrics);
    return run;
}

}  // namespace

HeadRun run_head(const TaskFeatures& features, std::span<const Task> sources, Task target, const HeadConfig& config) {
    const std::string id = cell_id(sources, target);
    try {
        std::vector<FeatureSet> train_parts, test_parts;
        for (Task t : sources) {
            const auto k = static_cast<std::size_t>(t);
            train_parts.push_back(features.train[k]);
            test_parts.push_back(features.test[k]);
            if (config.normalize) standardize(train_parts.back(), test_parts.back());
        }
        const FeatureSet train_set = concat_features(train_parts);
        const FeatureSet test_set = concat_features(test_parts);
        const std::size_t classes = features.classes[static_cast<std::size_t>(target)];
        const std::uint64_t seed = cell_seed(config.seed, sources, target);
        HeadRun run = config.train.precision == Precision::f64
                          ? train_cell<double>(train_set, test_set, classes, target, seed, config)
                          : train_cell<float>(train_set, test_set, classes, target, seed, config);
        run.sources.assign(sources.begin(), sources.end());
        return run;
    } catch (...) {
        rethrow_with_context("head " + id + ": ");
    }
}

double CrossTaskMatrix::accuracy(Task source, Task target) const {
    return cells[static_cast<std::size_t>(source)][static_cast<std::size_t>(target)].accuracy;
}

CrossTaskMatrix run_cross_task_matrix(const TaskFeatures& features, const HeadConfig& config) {
    CrossTaskMatrix matrix;
    for (Task t : kAllTasks) {
        const auto k = static_cast<std::size_t>(t);
        matrix.dims[k] = features.train[k].dim;
        matrix.baseline[k] = majority_baseline(features.test[k], t);
    }
    parallel_for(16, [&](std::size_t cell) {
        const Task source = kAllTasks[cell / 4];
        const Task target = kAllTasks[cell % 4];
        const std::array<Task, 1> sources{source};
        matrix.cells[cell / 4][cell % 4] = run_head(features, sources, target, config);
    });
    return matrix;
}

std::string_view to_string(FusionKind kind) {
    switch (kind) {
        case FusionKind::own: return "own";
        case FusionKind::other_three: return "other_three";
        case FusionKind::all: return "all";
    }
    return "?";
}

std::string_view display_name(FusionKind kind) {
    switch (kind) {
        case FusionKind::own: return "Own";
        case FusionKind::other_three: return "Other three";
        case FusionKind::all: return "All";
    }
    return "?";
}

std::vector<Task> fusion_sources(FusionKind kind, Task target) {
    std::vector<Task> out;
    for (Task t : kAllTasks) {
        const bool own = t == target;
        if (kind == FusionKind::all || (kind == FusionKind::own) == own) out.push_back(t);
    }
    return out;
}

double FusionReport::accuracy(FusionKind kind, Task target) const {
    return runs[static_cast<std::size_t>(kind)][static_cast<std::size_t>(target)].accuracy;
}

double FusionReport::margin(Task target) const {
    return accuracy(FusionKind::all, target) - accuracy(FusionKind::own, target);
}

FusionReport run_fusion_study(const TaskFeatures& features, const HeadConfig& config) {
    FusionReport report;
    parallel_for(12, [&](std::size_t job) {
        const FusionKind kind = kFusionKinds[job / 4];
        const Task target = kAllTasks[job % 4];
        const std::vector<Task> sources = fusion_sources(kind, target);
        report.runs[job / 4][job % 4] = run_head(features, sources, target, config);
    });
    return report;
}

#define FACEFUSE_INSTANTIATE(Real)                                                                              \
    template FeatureSet extract_features(const Network<Real>&, std::span<const Example<Real>>, Task,            \
                                         std::string);                                                          \
    template TaskFeatures extract_all(std::span<const Network<Real>, 4>, std::span<const Example<Real>>,        \
                                      std::span<const Example<Real>>, std::size_t);

FACEFUSE_INSTANTIATE(float)
FACEFUSE_INSTANTIATE(double)

#undef FACEFUSE_INSTANTIATE

}  // namespace facefuse
