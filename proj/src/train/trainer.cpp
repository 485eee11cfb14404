#include "facefuse/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "facefuse/error.hpp"
#include "facefuse/format.hpp"
#include "facefuse/parallel.hpp"
#include "facefuse/rng.hpp"

namespace facefuse {

std::string_view to_string(Precision precision) { return precision == Precision::f32 ? "f32" : "f64"; }

Precision parse_precision(std::string_view text) {
    if (text == "f32") return Precision::f32;
    if (text == "f64") return Precision::f64;
    throw ConfigError("unknown precision '" + std::string(text) + "' (expected f32 or f64)");
}

void TrainConfig::validate() const {
    if (batch_size == 0) throw ConfigError("batch size must be at least 1");
    if (!std::isfinite(lr.initial) || lr.initial < 0) throw ConfigError("initial learning rate must be >= 0");
    if (!(lr.factor > 0 && lr.factor <= 1)) throw ConfigError("learning-rate decay factor must lie in (0, 1]");
}

std::size_t TrainConfig::resolved_interval() const {
    return lr.interval != 0 ? lr.interval : std::max<std::size_t>(1, iterations / 4);
}

std::size_t TrainConfig::resolved_eval_every() const {
    return eval_every != 0 ? eval_every : std::max<std::size_t>(1, iterations / 100);
}

nlohmann::ordered_json TrainConfig::to_json() const {
    nlohmann::ordered_json j;
    j["batch_size"] = batch_size;
    j["iterations"] = iterations;
    j["lr_initial"] = lr.initial;
    j["lr_decay"] = lr.factor;
    j["lr_interval"] = resolved_interval();
    j["seed"] = seed;
    j["precision"] = std::string(to_string(precision));
    j["eval_every"] = resolved_eval_every();
    return j;
}

double lr_at(const TrainConfig& config, std::size_t iteration) {
    const std::size_t steps = iteration / config.resolved_interval();
    return config.lr.initial * std::pow(config.lr.factor, static_cast<double>(steps));
}

std::string metrics_csv(std::span<const MetricsRow> rows) {
    std::string out = "iteration,lr,train_loss,train_acc,test_acc\n";
    for (const MetricsRow& row : rows) {
        out += std::to_string(row.iteration) + "," + format_shortest(row.lr) + "," + format_shortest(row.train_loss) +
               "," + format_shortest(row.train_acc) + ",";
        if (row.test_acc) out += format_shortest(*row.test_acc);
        out += "\n";
    }
    return out;
}

void write_metrics_csv(std::span<const MetricsRow> rows, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write metrics " + path.string());
    out << metrics_csv(rows);
    if (!out) throw IoError("failed writing metrics " + path.string());
}

template <class Real>
std::size_t predict(const Network<Real>& network, const Tensor<Real>& input) {
    const Tensor<Real> logits = forward_full(network, input).logits;
    std::size_t best = 0;
    for (std::size_t k = 1; k < logits.size(); ++k) {
        if (logits[k] > logits[best]) best = k;
    }
    return best;
}

template <class Real>
std::vector<std::size_t> predict_all(const Network<Real>& network, std::span<const Example<Real>> examples) {
    std::vector<std::size_t> out(examples.size());
    parallel_for(examples.size(), [&](std::size_t i) { out[i] = predict(network, examples[i].input); });
    return out;
}

template <class Real>
double evaluate(const Network<Real>& network, std::span<const Example<Real>> examples, Task task) {
    if (examples.empty()) throw ConfigError("evaluate: empty evaluation set");
    const std::vector<std::size_t> predictions = predict_all(network, examples);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        if (static_cast<int>(predictions[i]) == examples[i].labels.get(task)) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(examples.size());
}

template <class Real>
std::vector<Example<Real>> feature_examples(const FeatureSet& set) {
    set.validate();
    std::vector<Example<Real>> out;
    out.reserve(set.rows.size());
    for (const FeatureRow& row : set.rows) {
        std::vector<Real> values(row.values.begin(), row.values.end());
        out.push_back({row.ref, row.labels, Tensor<Real>(Shape{set.dim}, std::move(values))});
    }
    return out;
}

template <class Real>
double evaluate(const Network<Real>& network, const FeatureSet& features, Task task) {
    const std::vector<Example<Real>> examples = feature_examples<Real>(features);
    return evaluate(network, std::span<const Example<Real>>(examples), task);
}

namespace {

// Per-sample work is split into fixed-size chunks; the chunk size, not the
// worker count, bounds memory, and reduction always runs in batch order.
constexpr std::size_t kChunk = 16;

template <class Real>
struct SampleStep {
    double loss = 0;
    bool correct = false;
    std::vector<LayerParams<Real>> grads;
};

template <class Real>
SampleStep<Real> sample_step(const Network<Real>& network, const Example<Real>& example, Task task) {
    const int label = example.labels.get(task);
    if (label < 0) throw LabelError("negative label for " + example.ref);
    const ForwardTrace<Real> trace = forward_trace(network, example.input);
    const SoftmaxLoss<Real> loss = softmax_cross_entropy(trace.logits, static_cast<std::size_t>(label));
    std::size_t best = 0;
    for (std::size_t k = 1; k < trace.logits.size(); ++k) {
        if (trace.logits[k] > trace.logits[best]) best = k;
    }
    return {static_cast<double>(loss.loss), best == static_cast<std::size_t>(label),
            backward(network, trace, loss.logit_grad)};
}

template <class Real>
void warn_missing_classes(std::span<const Example<Real>> train_set, Task task, std::size_t classes) {
    std::vector<std::size_t> counts(classes, 0);
    for (const Example<Real>& e : train_set) {
        const int label = e.labels.get(task);
        if (label >= 0 && static_cast<std::size_t>(label) < classes) ++counts[static_cast<std::size_t>(label)];
    }
    for (std::size_t k = 0; k < classes; ++k) {
        if (counts[k] == 0) {
            std::cerr << "warning: " << to_string(task) << " class " << k << " has no training examples\n";
        }
    }
}

}  // namespace

template <class Real>
TrainResult<Real> train(Network<Real> network, std::span<const Example<Real>> train_set,
                        std::span<const Example<Real>> test_set, Task task, const TrainConfig& config,
                        const std::string& config_echo) {
    config.validate();
    if (train_set.empty()) throw ConfigError("train: empty training set");
    warn_missing_classes(train_set, task, network.spec().output_units());

    Rng rng(config.seed);
    const std::size_t eval_every = config.resolved_eval_every();
    TrainResult<Real> result;
    result.metrics.reserve(config.iterations);
    std::vector<std::size_t> batch(config.batch_size);
    std::vector<SampleStep<Real>> slots(kChunk);

    for (std::size_t it = 0; it < config.iterations; ++it) {
        const double lr = lr_at(config, it);
        for (std::size_t& index : batch) index = rng.below(train_set.size());

        std::vector<LayerParams<Real>> total = zeros_like(network.params());
        double loss_sum = 0;
        std::size_t correct = 0;
        for (std::size_t start = 0; start < batch.size(); start += kChunk) {
            const std::size_t count = std::min(kChunk, batch.size() - start);
            parallel_for(count, [&](std::size_t j) {
                slots[j] = sample_step(network, train_set[batch[start + j]], task);
            });
            for (std::size_t j = 0; j < count; ++j) {
                accumulate(total, slots[j].grads);
                loss_sum += slots[j].loss;
                correct += slots[j].correct ? 1 : 0;
            }
        }
        const double batch_n = static_cast<double>(batch.size());
        const double mean_loss = loss_sum / batch_n;
        if (!std::isfinite(mean_loss)) {
            std::ostringstream msg;
            msg << "non-finite training loss at iteration " << it << " (lr " << format_shortest(lr) << "); batch:";
            for (std::size_t k = 0; k < std::min<std::size_t>(batch.size(), 8); ++k) {
                msg << " " << train_set[batch[k]].ref;
            }
            if (batch.size() > 8) msg << " ...";
            throw NumericError(msg.str());
        }
        // Stepping the summed gradient by lr/B applies the batch-mean gradient.
        sgd_step(network.mutable_params(), total, static_cast<Real>(lr / batch_n));

        MetricsRow row{it, lr, mean_loss, static_cast<double>(correct) / batch_n, std::nullopt};
        if (!test_set.empty() && ((it + 1) % eval_every == 0 || it + 1 == config.iterations)) {
            row.test_acc = evaluate(network, test_set, task);
        }
        result.metrics.push_back(row);
    }

    result.checkpoint.iteration = config.iterations;
    result.checkpoint.rng_state = rng.state();
    result.checkpoint.config_echo = config_echo.empty() ? config.to_json().dump() : config_echo;
    result.checkpoint.network = std::move(network);
    return result;
}

template <class Real>
TrainResult<Real> train_head(const FeatureSet& train_features, const FeatureSet& test_features, Network<Real> head,
                             Task target, const TrainConfig& config, const std::string& config_echo) {
    const Shape expected{train_features.dim};
    if (head.spec().input_shape != expected) {
        throw DimensionError("head input " + to_string(head.spec().input_shape) + " does not match feature width " +
                             std::to_string(train_features.dim));
    }
    if (!test_features.rows.empty() && test_features.dim != train_features.dim) {
        throw DimensionError("train and test feature widths differ");
    }
    const std::vector<Example<Real>> train_set = feature_examples<Real>(train_features);
    const std::vector<Example<Real>> test_set = feature_examples<Real>(test_features);
    return train(std::move(head), std::span<const Example<Real>>(train_set), std::span<const Example<Real>>(test_set),
                 target, config, config_echo);
}

#define FACEFUSE_INSTANTIATE(Real)                                                                             \
    template std::size_t predict(const Network<Real>&, const Tensor<Real>&);                                   \
    template std::vector<std::size_t> predict_all(const Network<Real>&, std::span<const Example<Real>>);       \
    template double evaluate(const Network<Real>&, std::span<const Example<Real>>, Task);                      \
    template double evaluate(const Network<Real>&, const FeatureSet&, Task);                                   \
    template std::vector<Example<Real>> feature_examples(const FeatureSet&);                                   \
    template TrainResult<Real> train(Network<Real>, std::span<const Example<Real>>,                            \
                                     std::span<const Example<Real>>, Task, const TrainConfig&,                 \
                                     const std::string&);                                                      \
    template TrainResult<Real> train_head(const FeatureSet&, const FeatureSet&, Network<Real>, Task,           \
                                          const TrainConfig&, const std::string&);

FACEFUSE_INSTANTIATE(float)
FACEFUSE_INSTANTIATE(double)

#undef FACEFUSE_INSTANTIATE

}  // namespace facefuse
