#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "facefuse/engine/layers.hpp"
#include "facefuse/task.hpp"

namespace facefuse {

/// Class count and feature-layer width for one attribute task.
struct TaskDescriptor {
    Task task = Task::id;
    std::size_t class_count = 0;
    std::size_t feature_dim = 0;

    /// age 3, race 4, gender 2, id `id_classes`; feature width 200 for id, 50 otherwise.
    static TaskDescriptor defaults(Task task, std::size_t id_classes = 77);
};

/// One conv or fully-connected stage. A conv stage may be followed by a
/// max-pool with window == stride == `pool` (0 disables pooling).
struct LayerSpec {
    LayerKind kind = LayerKind::fully_connected;
    std::size_t units = 0;
    std::size_t kernel = 0;
    std::size_t stride = 1;
    std::size_t padding = 0;
    bool relu = true;
    std::size_t pool = 0;

    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct NetworkSpec {
    std::string name;
    Shape input_shape;
    std::vector<LayerSpec> layers;
    std::size_t feature_tap = 0;
    std::uint64_t seed = 0;

    /// Output shape of every layer. Throws ConfigError naming the first stage
    /// whose input is too small or whose descriptor is inconsistent.
    std::vector<Shape> output_shapes() const;
    /// Full structural validation: shapes chain, a single linear FC output
    /// layer, feature_tap on the last hidden FC layer.
    void validate() const;
    std::size_t output_units() const { return layers.empty() ? 0 : layers.back().units; }
    std::size_t feature_dim() const { return layers.at(feature_tap).units; }

    /// Human-readable key=value block stored inside checkpoints.
    std::string to_text() const;
    static NetworkSpec from_text(std::string_view text);

    friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

template <class Real>
class Network {
public:
    Network() = default;
    /// Adopts existing parameters; DimensionError unless they realize `spec`.
    Network(NetworkSpec spec, std::vector<LayerParams<Real>> params);

    /// Zero-mean Gaussian weights drawn from spec.seed (std sqrt(2/fan_in) for conv,
    /// 1/sqrt(fan_in) for fully-connected); zero biases.
    static Network initialize(NetworkSpec spec);

    const NetworkSpec& spec() const noexcept { return spec_; }
    const std::vector<LayerParams<Real>>& params() const noexcept { return params_; }
    std::vector<LayerParams<Real>>& mutable_params() noexcept { return params_; }
    std::size_t feature_tap() const noexcept { return spec_.feature_tap; }

    friend bool operator==(const Network&, const Network&) = default;

private:
    NetworkSpec spec_;
    std::vector<LayerParams<Real>> params_;
};

template <class Real>
struct ForwardOutput {
    Tensor<Real> logits;
    Tensor<Real> feature;
};

/// Logits plus the post-activation output of the feature tap layer.
template <class Real>
ForwardOutput<Real> forward_full(const Network<Real>& network, const Tensor<Real>& input);

template <class Real>
struct LayerTrace {
    Tensor<Real> input;
    Tensor<Real> pre_activation;
    PoolIndices pool;
};

template <class Real>
struct ForwardTrace {
    std::vector<LayerTrace<Real>> layers;
    Tensor<Real> logits;
    Tensor<Real> feature;
};

template <class Real>
ForwardTrace<Real> forward_trace(const Network<Real>& network, const Tensor<Real>& input);

/// Parameter gradients for one sample given dLoss/dLogits.
template <class Real>
std::vector<LayerParams<Real>> backward(const Network<Real>& network, const ForwardTrace<Real>& trace,
                                        const Tensor<Real>& logit_grad);

struct BackboneOptions {
    std::array<std::size_t, 3> filters{16, 32, 64};
    std::array<std::size_t, 3> kernels{5, 5, 3};
    /// Pads every conv by kernel/2 so spatial size only shrinks at pooling.
    bool same_padding = false;
    std::size_t pool = 2;
};

struct HeadOptions {
    std::size_t hidden1 = 64;
    std::size_t hidden2 = 64;
};

/// conv-conv-conv (each ReLU + max-pool) -> FC(feature_dim) -> FC(class_count).
NetworkSpec backbone_spec(const TaskDescriptor& task, const Shape& input_shape, std::uint64_t seed,
                          const BackboneOptions& options = {});

/// FC(h1) -> FC(h2) -> FC(class_count) over a flat input of `input_dim`.
NetworkSpec head_spec(std::string name, std::size_t input_dim, std::size_t class_count, std::uint64_t seed,
                      const HeadOptions& options = {});

template <class Real>
Network<Real> build_backbone(const TaskDescriptor& task, const Shape& input_shape, std::uint64_t seed,
                             const BackboneOptions& options = {}) {
    return Network<Real>::initialize(backbone_spec(task, input_shape, seed, options));
}

template <class Real>
Network<Real> build_cross_task_head(std::size_t feature_dim, std::size_t class_count, std::uint64_t seed,
                                    const HeadOptions& options = {}) {
    return Network<Real>::initialize(head_spec("cross_head", feature_dim, class_count, seed, options));
}

/// Head over the concatenation of `feature_dims`; input width is their sum.
template <class Real>
Network<Real> build_fusion_head(std::span<const std::size_t> feature_dims, std::size_t class_count,
                                std::uint64_t seed, const HeadOptions& options = {});

/// The concatenating input stage of a fusion head.
template <class Real>
Tensor<Real> concat_inputs(std::span<const Tensor<Real>> parts);

/// Finite-difference check of every parameter of `network` under softmax
/// cross-entropy at (input, label).
double grad_check(Network<double>& network, const Tensor<double>& input, std::size_t label, double eps);

}  // namespace facefuse
