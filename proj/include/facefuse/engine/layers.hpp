#pragma once

#include <cstddef>
#include <vector>

#include "facefuse/engine/tensor.hpp"

namespace facefuse {

enum class LayerKind { conv, fully_connected };

const char* to_string(LayerKind kind);

/// Weights are [K, C, kh, kw] for conv and [out, in] for fully-connected;
/// bias holds one entry per output channel or unit.
template <class Real>
struct LayerParams {
    LayerKind kind = LayerKind::fully_connected;
    Tensor<Real> weights;
    Tensor<Real> bias;

    friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

/// Throws DimensionError unless the invariants above hold.
template <class Real>
void validate(const LayerParams<Real>& params);

/// Parameter gradients (same shapes as the parameters) plus the gradient with
/// respect to the layer input.
template <class Real>
struct GradientBundle {
    std::vector<LayerParams<Real>> params;
    Tensor<Real> input_grad;
};

struct ConvGeometry {
    std::size_t stride = 1;
    std::size_t padding = 0;
};

/// (extent + 2*padding - kernel) / stride + 1; ConfigError when it is not a
/// positive integer. `axis` names the axis in the message.
std::size_t conv_output_extent(std::size_t extent, std::size_t kernel, const ConvGeometry& geometry,
                               const char* axis);

template <class Real>
Tensor<Real> conv2d_forward(const Tensor<Real>& input, const LayerParams<Real>& params, const ConvGeometry& geometry);

/// With need_input_grad false the (expensive) input gradient is left empty.
template <class Real>
GradientBundle<Real> conv2d_backward(const Tensor<Real>& input, const LayerParams<Real>& params,
                                     const Tensor<Real>& upstream, const ConvGeometry& geometry,
                                     bool need_input_grad = true);

/// Flat argmax positions into the pooled input, one per output cell.
struct PoolIndices {
    Shape input_shape;
    Shape output_shape;
    std::vector<std::size_t> argmax;
};

template <class Real>
struct PoolResult {
    Tensor<Real> output;
    PoolIndices indices;
};

/// Output extent is floor((H - window) / stride) + 1; trailing rows/columns
/// that do not fill a window are dropped. Ties go to the lowest flat index;
/// a NaN in a window wins.
template <class Real>
PoolResult<Real> maxpool_forward(const Tensor<Real>& input, std::size_t window, std::size_t stride);

template <class Real>
Tensor<Real> maxpool_backward(const PoolIndices& indices, const Tensor<Real>& upstream);

template <class Real>
Tensor<Real> fc_forward(const Tensor<Real>& input, const LayerParams<Real>& params);

template <class Real>
GradientBundle<Real> fc_backward(const Tensor<Real>& input, const LayerParams<Real>& params,
                                 const Tensor<Real>& upstream, bool need_input_grad = true);

/// NaN passes through unchanged.
template <class Real>
Tensor<Real> relu(const Tensor<Real>& input);

template <class Real>
Tensor<Real> relu_backward(const Tensor<Real>& input, const Tensor<Real>& upstream);

template <class Real>
struct SoftmaxLoss {
    Real loss = 0;
    Tensor<Real> probs;
    Tensor<Real> logit_grad;
};

/// Max-subtracted softmax with cross-entropy against `label`.
template <class Real>
SoftmaxLoss<Real> softmax_cross_entropy(const Tensor<Real>& logits, std::size_t label);

/// p <- p - lr * g for every tensor. lr must be finite and >= 0.
template <class Real>
void sgd_step(std::vector<LayerParams<Real>>& params, const std::vector<LayerParams<Real>>& grads, Real lr);

/// dst += src, tensor by tensor (gradient accumulation).
template <class Real>
void accumulate(std::vector<LayerParams<Real>>& dst, const std::vector<LayerParams<Real>>& src);

/// Zero tensors shaped like `params`.
template <class Real>
std::vector<LayerParams<Real>> zeros_like(const std::vector<LayerParams<Real>>& params);

}  // namespace facefuse
