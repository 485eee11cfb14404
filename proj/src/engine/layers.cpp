#include "facefuse/engine/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "facefuse/error.hpp"
#include "facefuse/simd/kernels.hpp"

namespace facefuse {

const char* to_string(LayerKind kind) {
    return kind == LayerKind::conv ? "conv" : "fc";
}

template <class Real>
void validate(const LayerParams<Real>& params) {
    const Shape& w = params.weights.shape();
    const Shape& b = params.bias.shape();
    const std::size_t rank = params.kind == LayerKind::conv ? 4 : 2;
    if (w.size() != rank) {
        throw DimensionError(std::string(to_string(params.kind)) + " weights must have rank " +
                             std::to_string(rank) + ", got " + to_string(w));
    }
    if (b.size() != 1 || b[0] != w[0]) {
        throw DimensionError(std::string(to_string(params.kind)) + " bias shape " + to_string(b) +
                             " does not match output axis of weights " + to_string(w));
    }
}

std::size_t conv_output_extent(std::size_t extent, std::size_t kernel, const ConvGeometry& geometry,
                               const char* axis) {
    if (geometry.stride == 0) throw ConfigError("conv stride must be positive");
    const std::size_t padded = extent + 2 * geometry.padding;
    if (kernel == 0 || padded < kernel) {
        throw ConfigError(std::string("conv kernel ") + std::to_string(kernel) + " does not fit padded " + axis +
                          " extent " + std::to_string(padded));
    }
    if ((padded - kernel) % geometry.stride != 0) {
        throw ConfigError(std::string("conv output ") + axis + " extent (" + std::to_string(padded) + " - " +
                          std::to_string(kernel) + ") / " + std::to_string(geometry.stride) +
                          " + 1 is not an integer");
    }
    return (padded - kernel) / geometry.stride + 1;
}

namespace {

struct ConvDims {
    std::size_t channels, height, width;
    std::size_t filters, kh, kw;
    std::size_t out_h, out_w;
    std::size_t patch() const { return channels * kh * kw; }
    std::size_t positions() const { return out_h * out_w; }
};

template <class Real>
ConvDims conv_dims(const Tensor<Real>& input, const LayerParams<Real>& params, const ConvGeometry& geometry) {
    if (params.kind != LayerKind::conv) throw DimensionError("conv2d called with fully-connected parameters");
    validate(params);
    if (input.rank() != 3) {
        throw DimensionError("conv2d input must be [C,H,W], got " + to_string(input.shape()));
    }
    const Shape& w = params.weights.shape();
    if (w[1] != input.dim(0)) {
        throw DimensionError("conv2d channel axis mismatch: input has " + std::to_string(input.dim(0)) +
                             " channels, weights expect " + std::to_string(w[1]));
    }
    ConvDims d{input.dim(0), input.dim(1), input.dim(2), w[0], w[2], w[3], 0, 0};
    d.out_h = conv_output_extent(d.height, d.kh, geometry, "height");
    d.out_w = conv_output_extent(d.width, d.kw, geometry, "width");
    return d;
}

// Output columns [first, last) whose tap j lands inside the input row.
struct TapRange {
    std::size_t first = 0;
    std::size_t last = 0;
};

TapRange tap_range(std::size_t tap, std::size_t out_extent, std::size_t in_extent, const ConvGeometry& g) {
    TapRange r;
    // x * stride + tap - padding must lie in [0, in_extent).
    if (tap < g.padding) r.first = (g.padding - tap + g.stride - 1) / g.stride;
    const std::size_t limit = in_extent + g.padding;
    r.last = tap >= limit ? 0 : std::min(out_extent, (limit - tap + g.stride - 1) / g.stride);
    if (r.last < r.first) r.last = r.first;
    return r;
}

// Patch matrix [C*kh*kw, out_h*out_w]; out-of-range taps are zero.
template <class Real>
std::vector<Real> im2col(const Tensor<Real>& input, const ConvDims& d, const ConvGeometry& g) {
    std::vector<Real> cols(d.patch() * d.positions(), Real(0));
    const Real* src = input.data().data();
    std::size_t row = 0;
    for (std::size_t c = 0; c < d.channels; ++c) {
        for (std::size_t i = 0; i < d.kh; ++i) {
            const TapRange ys = tap_range(i, d.out_h, d.height, g);
            for (std::size_t j = 0; j < d.kw; ++j, ++row) {
                const TapRange xs = tap_range(j, d.out_w, d.width, g);
                Real* dst = cols.data() + row * d.positions();
                for (std::size_t y = ys.first; y < ys.last; ++y) {
                    const Real* line = src + (c * d.height + y * g.stride + i - g.padding) * d.width;
                    Real* out = dst + y * d.out_w;
                    for (std::size_t x = xs.first; x < xs.last; ++x) out[x] = line[x * g.stride + j - g.padding];
                }
            }
        }
    }
    return cols;
}

template <class Real>
Tensor<Real> col2im(const std::vector<Real>& cols, const ConvDims& d, const ConvGeometry& g) {
    Tensor<Real> out(Shape{d.channels, d.height, d.width});
    Real* dst = out.data().data();
    std::size_t row = 0;
    for (std::size_t c = 0; c < d.channels; ++c) {
        for (std::size_t i = 0; i < d.kh; ++i) {
            const TapRange ys = tap_range(i, d.out_h, d.height, g);
            for (std::size_t j = 0; j < d.kw; ++j, ++row) {
                const TapRange xs = tap_range(j, d.out_w, d.width, g);
                const Real* src = cols.data() + row * d.positions();
                for (std::size_t y = ys.first; y < ys.last; ++y) {
                    Real* line = dst + (c * d.height + y * g.stride + i - g.padding) * d.width;
                    const Real* in = src + y * d.out_w;
                    for (std::size_t x = xs.first; x < xs.last; ++x) {
                        Real& cell = line[x * g.stride + j - g.padding];
                        cell = cell + in[x];
                    }
                }
            }
        }
    }
    return out;
}

}  // namespace

template <class Real>
Tensor<Real> conv2d_forward(const Tensor<Real>& input, const LayerParams<Real>& params, const ConvGeometry& geometry) {
    const ConvDims d = conv_dims(input, params, geometry);
    const std::vector<Real> cols = im2col(input, d, geometry);
    const std::size_t positions = d.positions();
    const std::size_t patch = d.patch();

    Tensor<Real> out(Shape{d.filters, d.out_h, d.out_w});
    std::span<Real> out_data = out.data();
    for (std::size_t k = 0; k < d.filters; ++k) {
        std::fill_n(out_data.begin() + static_cast<std::ptrdiff_t>(k * positions), positions, params.bias[k]);
    }
    simd::gemm(d.filters, positions, patch, params.weights.data().data(), cols.data(), out_data.data());
    return out;
}

template <class Real>
GradientBundle<Real> conv2d_backward(const Tensor<Real>& input, const LayerParams<Real>& params,
                                     const Tensor<Real>& upstream, const ConvGeometry& geometry,
                                     bool need_input_grad) {
    const ConvDims d = conv_dims(input, params, geometry);
    const Shape expected{d.filters, d.out_h, d.out_w};
    if (upstream.shape() != expected) {
        throw DimensionError("conv2d upstream gradient shape " + to_string(upstream.shape()) +
                             " does not match forward output " + to_string(expected));
    }
    const std::vector<Real> cols = im2col(input, d, geometry);
    const std::size_t positions = d.positions();
    const std::size_t patch = d.patch();
    std::span<const Real> grad = upstream.data();
    std::vector<Real> grad_t(grad.size());
    for (std::size_t k = 0; k < d.filters; ++k)
        for (std::size_t p = 0; p < positions; ++p) grad_t[p * d.filters + k] = grad[k * positions + p];
    // dW^T [patch, filters] = cols * grad^T, then transposed into place.
    std::vector<Real> weight_grad_t(patch * d.filters, Real(0));
    simd::gemm(patch, d.filters, positions, cols.data(), grad_t.data(), weight_grad_t.data());

    LayerParams<Real> g{LayerKind::conv, Tensor<Real>(params.weights.shape()), Tensor<Real>(params.bias.shape())};
    for (std::size_t k = 0; k < d.filters; ++k) {
        Real bias_sum = 0;
        for (Real v : grad.subspan(k * positions, positions)) bias_sum = bias_sum + v;
        g.bias[k] = bias_sum;
        for (std::size_t q = 0; q < patch; ++q) g.weights[k * patch + q] = weight_grad_t[q * d.filters + k];
    }

    GradientBundle<Real> out;
    out.params.push_back(std::move(g));
    if (need_input_grad) {
        std::vector<Real> weights_t(patch * d.filters);
        for (std::size_t k = 0; k < d.filters; ++k)
            for (std::size_t q = 0; q < patch; ++q) weights_t[q * d.filters + k] = params.weights[k * patch + q];
        std::vector<Real> grad_cols(patch * positions, Real(0));
        simd::gemm(patch, positions, d.filters, weights_t.data(), grad.data(), grad_cols.data());
        out.input_grad = col2im(grad_cols, d, geometry);
    }
    return out;
}

template <class Real>
PoolResult<Real> maxpool_forward(const Tensor<Real>& input, std::size_t window, std::size_t stride) {
    if (input.rank() != 3) throw DimensionError("maxpool input must be [C,H,W], got " + to_string(input.shape()));
    if (window == 0 || stride == 0) throw ConfigError("maxpool window and stride must be positive");
    const std::size_t channels = input.dim(0), height = input.dim(1), width = input.dim(2);
    if (window > height || window > width) {
        throw ConfigError("maxpool window " + std::to_string(window) + " larger than input " +
                          to_string(input.shape()));
    }
    const std::size_t out_h = (height - window) / stride + 1;
    const std::size_t out_w = (width - window) / stride + 1;

    PoolResult<Real> result{Tensor<Real>(Shape{channels, out_h, out_w}),
                            PoolIndices{input.shape(), Shape{channels, out_h, out_w}, {}}};
    result.indices.argmax.resize(channels * out_h * out_w);
    std::size_t cell = 0;
    for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t y = 0; y < out_h; ++y) {
            for (std::size_t x = 0; x < out_w; ++x, ++cell) {
                std::size_t best = (c * height + y * stride) * width + x * stride;
                Real best_value = input[best];
                for (std::size_t i = 0; i < window; ++i) {
                    for (std::size_t j = 0; j < window; ++j) {
                        const std::size_t flat = (c * height + y * stride + i) * width + x * stride + j;
                        if (input[flat] > best_value || std::isnan(input[flat])) {
                            best_value = input[flat];
                            best = flat;
                        }
                    }
                }
                result.output[cell] = best_value;
                result.indices.argmax[cell] = best;
            }
        }
    }
    return result;
}

template <class Real>
Tensor<Real> maxpool_backward(const PoolIndices& indices, const Tensor<Real>& upstream) {
    if (upstream.shape() != indices.output_shape || indices.argmax.size() != upstream.size()) {
        throw DimensionError("maxpool upstream gradient shape " + to_string(upstream.shape()) +
                             " does not match stored indices for output " + to_string(indices.output_shape));
    }
    Tensor<Real> grad(indices.input_shape);
    for (std::size_t cell = 0; cell < upstream.size(); ++cell) {
        const std::size_t target = indices.argmax[cell];
        if (target >= grad.size()) throw DimensionError("maxpool argmax index out of range");
        grad[target] = grad[target] + upstream[cell];
    }
    return grad;
}

namespace {

template <class Real>
void check_fc(const Tensor<Real>& input, const LayerParams<Real>& params) {
    if (params.kind != LayerKind::fully_connected) {
        throw DimensionError("fully-connected layer called with conv parameters");
    }
    validate(params);
    if (input.size() != params.weights.dim(1)) {
        throw DimensionError("fully-connected input length " + std::to_string(input.size()) +
                             " does not match weight input axis " + std::to_string(params.weights.dim(1)));
    }
}

}  // namespace

template <class Real>
Tensor<Real> fc_forward(const Tensor<Real>& input, const LayerParams<Real>& params) {
    check_fc(input, params);
    const std::size_t units = params.weights.dim(0);
    const std::size_t fan_in = params.weights.dim(1);
    Tensor<Real> out(Shape{units});
    std::span<const Real> weights = params.weights.data();
    for (std::size_t o = 0; o < units; ++o) {
        out[o] = simd::dot(weights.subspan(o * fan_in, fan_in), input.data()) + params.bias[o];
    }
    return out;
}

template <class Real>
GradientBundle<Real> fc_backward(const Tensor<Real>& input, const LayerParams<Real>& params,
                                 const Tensor<Real>& upstream, bool need_input_grad) {
    check_fc(input, params);
    const std::size_t units = params.weights.dim(0);
    const std::size_t fan_in = params.weights.dim(1);
    if (upstream.size() != units || upstream.rank() != 1) {
        throw DimensionError("fully-connected upstream gradient shape " + to_string(upstream.shape()) +
                             " does not match output [" + std::to_string(units) + "]");
    }
    LayerParams<Real> g{LayerKind::fully_connected, Tensor<Real>(params.weights.shape()), Tensor<Real>(params.bias.shape())};
    std::span<Real> grad_w = g.weights.data();
    for (std::size_t o = 0; o < units; ++o) {
        g.bias[o] = upstream[o];
        simd::axpy(upstream[o], input.data(), grad_w.subspan(o * fan_in, fan_in));
    }
    GradientBundle<Real> out;
    out.params.push_back(std::move(g));
    if (need_input_grad) {
        out.input_grad = Tensor<Real>(input.shape());
        std::span<const Real> weights = params.weights.data();
        for (std::size_t o = 0; o < units; ++o) {
            simd::axpy(upstream[o], weights.subspan(o * fan_in, fan_in), out.input_grad.data());
        }
    }
    return out;
}

template <class Real>
Tensor<Real> relu(const Tensor<Real>& input) {
    Tensor<Real> out = input;
    for (Real& v : out.data()) v = v > Real(0) || std::isnan(v) ? v : Real(0);
    return out;
}

template <class Real>
Tensor<Real> relu_backward(const Tensor<Real>& input, const Tensor<Real>& upstream) {
    if (input.shape() != upstream.shape()) {
        throw DimensionError("relu upstream gradient shape " + to_string(upstream.shape()) +
                             " does not match input " + to_string(input.shape()));
    }
    Tensor<Real> grad(input.shape());
    for (std::size_t i = 0; i < input.size(); ++i) grad[i] = input[i] > Real(0) ? upstream[i] : Real(0);
    return grad;
}

template <class Real>
SoftmaxLoss<Real> softmax_cross_entropy(const Tensor<Real>& logits, std::size_t label) {
    if (label >= logits.size()) {
        throw LabelError("label " + std::to_string(label) + " out of range for " + std::to_string(logits.size()) +
                         " classes");
    }
    const Real peak = *std::max_element(logits.data().begin(), logits.data().end());
    SoftmaxLoss<Real> out{0, Tensor<Real>(logits.shape()), Tensor<Real>(logits.shape())};
    Real total = 0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out.probs[i] = std::exp(logits[i] - peak);
        total = total + out.probs[i];
    }
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out.probs[i] = out.probs[i] / total;
        out.logit_grad[i] = out.probs[i] - (i == label ? Real(1) : Real(0));
    }
    // log-sum-exp form stays accurate when probs[label] underflows.
    out.loss = std::log(total) - (logits[label] - peak);
    return out;
}

template <class Real>
void sgd_step(std::vector<LayerParams<Real>>& params, const std::vector<LayerParams<Real>>& grads, Real lr) {
    if (!(lr >= Real(0)) || !std::isfinite(lr)) {
        throw ConfigError("learning rate must be finite and non-negative, got " + std::to_string(lr));
    }
    if (params.size() != grads.size()) {
        throw DimensionError("sgd_step: " + std::to_string(params.size()) + " parameter layers but " +
                             std::to_string(grads.size()) + " gradient layers");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].weights.shape() != grads[i].weights.shape() || params[i].bias.shape() != grads[i].bias.shape()) {
            throw DimensionError("sgd_step: gradient shape mismatch at layer " + std::to_string(i));
        }
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        simd::axpy(-lr, grads[i].weights.data(), params[i].weights.data());
        simd::axpy(-lr, grads[i].bias.data(), params[i].bias.data());
    }
}

template <class Real>
void accumulate(std::vector<LayerParams<Real>>& dst, const std::vector<LayerParams<Real>>& src) {
    if (dst.size() != src.size()) throw DimensionError("accumulate: layer count mismatch");
    for (std::size_t i = 0; i < dst.size(); ++i) {
        if (dst[i].weights.shape() != src[i].weights.shape() || dst[i].bias.shape() != src[i].bias.shape()) {
            throw DimensionError("accumulate: shape mismatch at layer " + std::to_string(i));
        }
        simd::axpy(Real(1), src[i].weights.data(), dst[i].weights.data());
        simd::axpy(Real(1), src[i].bias.data(), dst[i].bias.data());
    }
}

template <class Real>
std::vector<LayerParams<Real>> zeros_like(const std::vector<LayerParams<Real>>& params) {
    std::vector<LayerParams<Real>> out;
    out.reserve(params.size());
    for (const auto& p : params) {
        out.push_back({p.kind, Tensor<Real>(p.weights.shape()), Tensor<Real>(p.bias.shape())});
    }
    return out;
}

#define FACEFUSE_INSTANTIATE(Real)                                                                              \
    template void validate(const LayerParams<Real>&);                                                           \
    template Tensor<Real> conv2d_forward(const Tensor<Real>&, const LayerParams<Real>&, const ConvGeometry&);     \
    template GradientBundle<Real> conv2d_backward(const Tensor<Real>&, const LayerParams<Real>&,                 \
                                                  const Tensor<Real>&, const ConvGeometry&, bool);              \
    template PoolResult<Real> maxpool_forward(const Tensor<Real>&, std::size_t, std::size_t);                    \
    template Tensor<Real> maxpool_backward(const PoolIndices&, const Tensor<Real>&);                             \
    template Tensor<Real> fc_forward(const Tensor<Real>&, const LayerParams<Real>&);                             \
    template GradientBundle<Real> fc_backward(const Tensor<Real>&, const LayerParams<Real>&, const Tensor<Real>&, \
                                              bool);                                                            \
    template Tensor<Real> relu(const Tensor<Real>&);                                                            \
    template Tensor<Real> relu_backward(const Tensor<Real>&, const Tensor<Real>&);                               \
    template SoftmaxLoss<Real> softmax_cross_entropy(const Tensor<Real>&, std::size_t);                          \
    template void sgd_step(std::vector<LayerParams<Real>>&, const std::vector<LayerParams<Real>>&, Real);        \
    template void accumulate(std::vector<LayerParams<Real>>&, const std::vector<LayerParams<Real>>&);            \
    template std::vector<LayerParams<Real>> zeros_like(const std::vector<LayerParams<Real>>&);

FACEFUSE_INSTANTIATE(float)
FACEFUSE_INSTANTIATE(double)

#undef FACEFUSE_INSTANTIATE

}  // namespace facefuse
