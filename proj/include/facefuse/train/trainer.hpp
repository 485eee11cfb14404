#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "facefuse/data/dataset.hpp"
#include "facefuse/expt/feature_set.hpp"
#include "facefuse/model/network.hpp"
#include "facefuse/task.hpp"

namespace facefuse {

enum class Precision { f32, f64 };

std::string_view to_string(Precision precision);
Precision parse_precision(std::string_view text);

/// Step decay: lr = initial * factor^floor(iteration / interval).
struct LrSchedule {
    double initial = 0.05;
    double factor = 0.5;
    /// 0 selects a quarter of the total iterations.
    std::size_t interval = 0;
};

struct TrainConfig {
    std::size_t batch_size = 200;
    std::size_t iterations = 20000;
    LrSchedule lr;
    std::uint64_t seed = 1;
    Precision precision = Precision::f32;
    /// 0 selects iterations / 100 (at least 1).
    std::size_t eval_every = 0;

    /// ConfigError unless batch >= 1, lr >= 0 and finite, 0 < factor <= 1.
    void validate() const;
    std::size_t resolved_interval() const;
    std::size_t resolved_eval_every() const;

    nlohmann::ordered_json to_json() const;
};

double lr_at(const TrainConfig& config, std::size_t iteration);

/// One row per iteration; test_acc only on evaluation iterations.
struct MetricsRow {
    std::size_t iteration = 0;
    double lr = 0;
    double train_loss = 0;
    double train_acc = 0;
    std::optional<double> test_acc;

    friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

/// CSV with header iteration,lr,train_loss,train_acc,test_acc.
void write_metrics_csv(std::span<const MetricsRow> rows, const std::filesystem::path& path);
std::string metrics_csv(std::span<const MetricsRow> rows);

template <class Real>
struct Checkpoint {
    Network<Real> network;
    std::uint64_t iteration = 0;
    std::string rng_state;
    std::string config_echo;
};

template <class Real>
struct TrainResult {
    Checkpoint<Real> checkpoint;
    std::vector<MetricsRow> metrics;
};

/// Mini-batch SGD: each iteration draws batch_size examples with replacement
/// from `train_set`, averages softmax cross-entropy, back-propagates, and
/// steps with lr_at(iteration). Test accuracy is measured every eval_every
/// iterations and after the last one. Per-sample gradients are summed in
/// batch order, so results do not depend on the worker count.
/// NumericError if the loss becomes non-finite.
template <class Real>
TrainResult<Real> train(Network<Real> network, std::span<const Example<Real>> train_set,
                        std::span<const Example<Real>> test_set, Task task, const TrainConfig& config,
                        const std::string& config_echo = {});

/// Same loop over precomputed feature vectors; the producing backbone is
/// not involved. DimensionError if the feature width differs from the head input.
template <class Real>
TrainResult<Real> train_head(const FeatureSet& train_features, const FeatureSet& test_features, Network<Real> head,
                             Task target, const TrainConfig& config, const std::string& config_echo = {});

/// Feature rows as flat network inputs.
template <class Real>
std::vector<Example<Real>> feature_examples(const FeatureSet& set);

/// Argmax of the logits; ties resolve to the lowest class index.
template <class Real>
std::size_t predict(const Network<Real>& network, const Tensor<Real>& input);

template <class Real>
std::vector<std::size_t> predict_all(const Network<Real>& network, std::span<const Example<Real>> examples);

/// Fraction of examples whose prediction equals the `task` label.
template <class Real>
double evaluate(const Network<Real>& network, std::span<const Example<Real>> examples, Task task);

template <class Real>
double evaluate(const Network<Real>& network, const FeatureSet& features, Task task);

}  // namespace facefuse
