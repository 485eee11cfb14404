#include "facefuse/model/network.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "facefuse/engine/gradcheck.hpp"
#include "facefuse/error.hpp"
#include "facefuse/rng.hpp"

namespace facefuse {

TaskDescriptor TaskDescriptor::defaults(Task task, std::size_t id_classes) {
    switch (task) {
        case Task::id: return {task, id_classes, 200};
        case Task::age: return {task, kAgeClasses, 50};
        case Task::race: return {task, kRaceClasses, 50};
        case Task::gender: return {task, kGenderClasses, 50};
    }
    return {};
}

std::vector<Shape> NetworkSpec::output_shapes() const {
    if (input_shape.empty()) throw ConfigError(name + ": empty input shape");
    for (std::size_t extent : input_shape) {
        if (extent == 0) throw ConfigError(name + ": input shape " + to_string(input_shape) + " has a zero extent");
    }
    std::vector<Shape> shapes;
    Shape current = input_shape;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const LayerSpec& layer = layers[i];
        const std::string stage = name + " layer " + std::to_string(i) + " (" + to_string(layer.kind) + ")";
        if (layer.units == 0) throw ConfigError(stage + ": zero output units");
        if (layer.kind == LayerKind::conv) {
            if (current.size() != 3) {
                throw ConfigError(stage + ": conv needs a [C,H,W] input, got " + to_string(current));
            }
            Shape next{layer.units, 0, 0};
            try {
                const ConvGeometry g{layer.stride, layer.padding};
                next[1] = conv_output_extent(current[1], layer.kernel, g, "height");
                next[2] = conv_output_extent(current[2], layer.kernel, g, "width");
            } catch (const ConfigError& e) {
                throw ConfigError(stage + ": input " + to_string(current) + " too small: " + e.what());
            }
            if (layer.pool != 0) {
                if (next[1] < layer.pool || next[2] < layer.pool) {
                    throw ConfigError(stage + ": conv output " + to_string(next) + " too small for " +
                                      std::to_string(layer.pool) + "x" + std::to_string(layer.pool) + " pooling");
                }
                next[1] = (next[1] - layer.pool) / layer.pool + 1;
                next[2] = (next[2] - layer.pool) / layer.pool + 1;
            }
            current = next;
        } else {
            if (layer.pool != 0) throw ConfigError(stage + ": pooling is only defined for conv stages");
            current = Shape{layer.units};
        }
        shapes.push_back(current);
    }
    return shapes;
}

void NetworkSpec::validate() const {
    output_shapes();
    if (layers.size() < 2) throw ConfigError(name + ": need a feature layer and an output layer");
    const LayerSpec& out = layers.back();
    if (out.kind != LayerKind::fully_connected || out.relu) {
        throw ConfigError(name + ": terminal layer must be a linear fully-connected output layer");
    }
    for (std::size_t i = 0; i + 1 < layers.size(); ++i) {
        if (!layers[i].relu) throw ConfigError(name + ": only the terminal layer may omit its activation");
    }
    if (feature_tap != layers.size() - 2 || layers[feature_tap].kind != LayerKind::fully_connected) {
        throw ConfigError(name + ": feature_tap must index the last hidden fully-connected layer");
    }
}

namespace {

std::string join_shape(const Shape& shape) {
    std::string out;
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(shape[i]);
    }
    return out;
}

std::uint64_t parse_u64(std::string_view text, std::string_view what) {
    std::uint64_t value = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || end != text.data() + text.size()) {
        throw ConfigError("network spec: bad integer for " + std::string(what) + ": '" + std::string(text) + "'");
    }
    return value;
}

Shape parse_shape(std::string_view text) {
    Shape shape;
    while (!text.empty()) {
        const std::size_t comma = text.find(',');
        shape.push_back(parse_u64(text.substr(0, comma), "input"));
        if (comma == std::string_view::npos) break;
        text.remove_prefix(comma + 1);
    }
    return shape;
}

LayerSpec parse_layer(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string kind;
    in >> kind;
    LayerSpec layer;
    if (kind == "conv") {
        layer.kind = LayerKind::conv;
    } else if (kind == "fc") {
        layer.kind = LayerKind::fully_connected;
    } else {
        throw ConfigError("network spec: unknown layer kind '" + kind + "'");
    }
    std::string field;
    while (in >> field) {
        const std::size_t eq = field.find('=');
        if (eq == std::string::npos) throw ConfigError("network spec: malformed layer field '" + field + "'");
        const std::string key = field.substr(0, eq);
        const std::uint64_t value = parse_u64(std::string_view(field).substr(eq + 1), key);
        if (key == "units") layer.units = value;
        else if (key == "kernel") layer.kernel = value;
        else if (key == "stride") layer.stride = value;
        else if (key == "padding") layer.padding = value;
        else if (key == "relu") layer.relu = value != 0;
        else if (key == "pool") layer.pool = value;
        else throw ConfigError("network spec: unknown layer field '" + key + "'");
    }
    return layer;
}

}  // namespace

std::string NetworkSpec::to_text() const {
    std::ostringstream out;
    out << "name=" << name << "\n";
    out << "seed=" << seed << "\n";
    out << "input=" << join_shape(input_shape) << "\n";
    out << "feature_tap=" << feature_tap << "\n";
    for (const LayerSpec& layer : layers) {
        out << "layer=" << to_string(layer.kind) << " units=" << layer.units;
        if (layer.kind == LayerKind::conv) {
            out << " kernel=" << layer.kernel << " stride=" << layer.stride << " padding=" << layer.padding;
        }
        out << " relu=" << (layer.relu ? 1 : 0);
        if (layer.kind == LayerKind::conv) out << " pool=" << layer.pool;
        out << "\n";
    }
    return out.str();
}

NetworkSpec NetworkSpec::from_text(std::string_view text) {
    NetworkSpec spec;
    bool saw_input = false;
    while (!text.empty()) {
        const std::size_t newline = text.find('\n');
        std::string_view line = text.substr(0, newline);
        text.remove_prefix(newline == std::string_view::npos ? text.size() : newline + 1);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError("network spec: malformed line '" + std::string(line) + "'");
        const std::string_view key = line.substr(0, eq);
        const std::string_view value = line.substr(eq + 1);
        if (key == "name") {
            spec.name = value;
        } else if (key == "seed") {
            spec.seed = parse_u64(value, key);
        } else if (key == "input") {
            spec.input_shape = parse_shape(value);
            saw_input = true;
        } else if (key == "feature_tap") {
            spec.feature_tap = parse_u64(value, key);
        } else if (key == "layer") {
            spec.layers.push_back(parse_layer(value));
        } else {
            throw ConfigError("network spec: unknown key '" + std::string(key) + "'");
        }
    }
    if (!saw_input) throw ConfigError("network spec: missing input shape");
    spec.validate();
    return spec;
}

namespace {

// Input extent seen by each layer, for parameter shapes.
std::vector<Shape> layer_inputs(const NetworkSpec& spec) {
    std::vector<Shape> inputs{spec.input_shape};
    const std::vector<Shape> outputs = spec.output_shapes();
    inputs.insert(inputs.end(), outputs.begin(), outputs.end() - 1);
    return inputs;
}

Shape weight_shape(const LayerSpec& layer, const Shape& input) {
    if (layer.kind == LayerKind::conv) return {layer.units, input[0], layer.kernel, layer.kernel};
    return {layer.units, element_count(input)};
}

}  // namespace

template <class Real>
Network<Real>::Network(NetworkSpec spec, std::vector<LayerParams<Real>> params)
    : spec_(std::move(spec)), params_(std::move(params)) {
    spec_.validate();
    if (params_.size() != spec_.layers.size()) {
        throw DimensionError(spec_.name + ": " + std::to_string(params_.size()) + " parameter layers for " +
                             std::to_string(spec_.layers.size()) + " spec layers");
    }
    const std::vector<Shape> inputs = layer_inputs(spec_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
        const LayerSpec& layer = spec_.layers[i];
        const Shape expected = weight_shape(layer, inputs[i]);
        if (params_[i].kind != layer.kind || params_[i].weights.shape() != expected ||
            params_[i].bias.shape() != Shape{layer.units}) {
            throw DimensionError(spec_.name + " layer " + std::to_string(i) + ": parameters " +
                                 to_string(params_[i].weights.shape()) + " do not realize spec weights " +
                                 to_string(expected));
        }
    }
}

template <class Real>
Network<Real> Network<Real>::initialize(NetworkSpec spec) {
    spec.validate();
    Rng rng(spec.seed);
    const std::vector<Shape> inputs = layer_inputs(spec);
    std::vector<LayerParams<Real>> params;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& layer = spec.layers[i];
        LayerParams<Real> p{layer.kind, Tensor<Real>(weight_shape(layer, inputs[i])), Tensor<Real>(Shape{layer.units})};
        const double fan_in = static_cast<double>(p.weights.size() / layer.units);
        const double stddev = layer.kind == LayerKind::conv ? std::sqrt(2.0 / fan_in) : 1.0 / std::sqrt(fan_in);
        for (Real& w : p.weights.data()) w = static_cast<Real>(stddev * rng.normal());
        params.push_back(std::move(p));
    }
    return Network(std::move(spec), std::move(params));
}

namespace {

template <class Real>
void check_input(const NetworkSpec& spec, const Tensor<Real>& input) {
    if (input.shape() != spec.input_shape) {
        throw DimensionError(spec.name + ": input shape " + to_string(input.shape()) + " does not match spec " +
                             to_string(spec.input_shape));
    }
}

}  // namespace

template <class Real>
ForwardTrace<Real> forward_trace(const Network<Real>& network, const Tensor<Real>& input) {
    const NetworkSpec& spec = network.spec();
    check_input(spec, input);
    ForwardTrace<Real> trace;
    trace.layers.reserve(spec.layers.size());
    Tensor<Real> current = input;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& layer = spec.layers[i];
        LayerTrace<Real> step;
        step.input = std::move(current);
        if (layer.kind == LayerKind::conv) {
            step.pre_activation =
                conv2d_forward(step.input, network.params()[i], ConvGeometry{layer.stride, layer.padding});
        } else {
            step.pre_activation = fc_forward(step.input, network.params()[i]);
        }
        current = layer.relu ? relu(step.pre_activation) : step.pre_activation;
        if (layer.pool != 0) {
            PoolResult<Real> pooled = maxpool_forward(current, layer.pool, layer.pool);
            current = std::move(pooled.output);
            step.pool = std::move(pooled.indices);
        }
        if (i == spec.feature_tap) trace.feature = current;
        trace.layers.push_back(std::move(step));
    }
    trace.logits = std::move(current);
    return trace;
}

template <class Real>
ForwardOutput<Real> forward_full(const Network<Real>& network, const Tensor<Real>& input) {
    const NetworkSpec& spec = network.spec();
    check_input(spec, input);
    ForwardOutput<Real> out;
    Tensor<Real> current = input;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& layer = spec.layers[i];
        if (layer.kind == LayerKind::conv) {
            current = conv2d_forward(current, network.params()[i], ConvGeometry{layer.stride, layer.padding});
        } else {
            current = fc_forward(current, network.params()[i]);
        }
        if (layer.relu) current = relu(current);
        if (layer.pool != 0) current = maxpool_forward(current, layer.pool, layer.pool).output;
        if (i == spec.feature_tap) out.feature = current;
    }
    out.logits = std::move(current);
    return out;
}

template <class Real>
std::vector<LayerParams<Real>> backward(const Network<Real>& network, const ForwardTrace<Real>& trace,
                                        const Tensor<Real>& logit_grad) {
    const NetworkSpec& spec = network.spec();
    if (trace.layers.size() != spec.layers.size()) throw DimensionError("backward: trace does not match network");
    std::vector<LayerParams<Real>> grads(spec.layers.size());
    Tensor<Real> upstream = logit_grad;
    for (std::size_t i = spec.layers.size(); i-- > 0;) {
        const LayerSpec& layer = spec.layers[i];
        const LayerTrace<Real>& step = trace.layers[i];
        if (layer.pool != 0) upstream = maxpool_backward(step.pool, upstream);
        if (layer.relu) upstream = relu_backward(step.pre_activation, upstream);
        const bool need_input = i != 0;
        GradientBundle<Real> bundle =
            layer.kind == LayerKind::conv
                ? conv2d_backward(step.input, network.params()[i], upstream,
                                  ConvGeometry{layer.stride, layer.padding}, need_input)
                : fc_backward(step.input, network.params()[i], upstream, need_input);
        grads[i] = std::move(bundle.params[0]);
        if (need_input) upstream = std::move(bundle.input_grad);
    }
    return grads;
}

NetworkSpec backbone_spec(const TaskDescriptor& task, const Shape& input_shape, std::uint64_t seed,
                          const BackboneOptions& options) {
    if (task.class_count == 0 || task.feature_dim == 0) {
        throw ConfigError("backbone for task " + std::string(to_string(task.task)) +
                          " needs positive class count and feature width");
    }
    NetworkSpec spec;
    spec.name = "backbone_" + std::string(to_string(task.task));
    spec.input_shape = input_shape;
    spec.seed = seed;
    for (std::size_t stage = 0; stage < 3; ++stage) {
        const std::size_t kernel = options.kernels[stage];
        spec.layers.push_back({LayerKind::conv, options.filters[stage], kernel, 1,
                               options.same_padding ? kernel / 2 : 0, true, options.pool});
    }
    spec.layers.push_back({LayerKind::fully_connected, task.feature_dim, 0, 1, 0, true, 0});
    spec.layers.push_back({LayerKind::fully_connected, task.class_count, 0, 1, 0, false, 0});
    spec.feature_tap = 3;
    spec.validate();
    return spec;
}

NetworkSpec head_spec(std::string name, std::size_t input_dim, std::size_t class_count, std::uint64_t seed,
                      const HeadOptions& options) {
    if (input_dim == 0 || class_count == 0 || options.hidden1 == 0 || options.hidden2 == 0) {
        throw ConfigError(name + ": head dimensions must be positive");
    }
    NetworkSpec spec;
    spec.name = std::move(name);
    spec.input_shape = {input_dim};
    spec.seed = seed;
    spec.layers = {
        {LayerKind::fully_connected, options.hidden1, 0, 1, 0, true, 0},
        {LayerKind::fully_connected, options.hidden2, 0, 1, 0, true, 0},
        {LayerKind::fully_connected, class_count, 0, 1, 0, false, 0},
    };
    spec.feature_tap = 1;
    spec.validate();
    return spec;
}

template <class Real>
Network<Real> build_fusion_head(std::span<const std::size_t> feature_dims, std::size_t class_count,
                                std::uint64_t seed, const HeadOptions& options) {
    if (feature_dims.empty()) throw ConfigError("fusion head needs at least one feature set");
    std::size_t width = 0;
    for (std::size_t d : feature_dims) {
        if (d == 0) throw ConfigError("fusion head: zero-width feature set");
        width += d;
    }
    return Network<Real>::initialize(head_spec("fusion_head", width, class_count, seed, options));
}

template <class Real>
Tensor<Real> concat_inputs(std::span<const Tensor<Real>> parts) {
    if (parts.empty()) throw ConfigError("concat: no inputs");
    std::vector<Real> values;
    for (const Tensor<Real>& part : parts) values.insert(values.end(), part.data().begin(), part.data().end());
    const std::size_t n = values.size();
    return Tensor<Real>(Shape{n}, std::move(values));
}

double grad_check(Network<double>& network, const Tensor<double>& input, std::size_t label, double eps) {
    const NetworkSpec spec = network.spec();
    LossAndGradients evaluate = [&](const std::vector<LayerParams<double>>& params) {
        const Network<double> probe(spec, params);
        const ForwardTrace<double> trace = forward_trace(probe, input);
        const SoftmaxLoss<double> loss = softmax_cross_entropy(trace.logits, label);
        return std::pair{loss.loss, backward(probe, trace, loss.logit_grad)};
    };
    return grad_check(network.mutable_params(), evaluate, eps);
}

#define FACEFUSE_INSTANTIATE(Real)                                                                        \
    template class Network<Real>;                                                                         \
    template ForwardOutput<Real> forward_full(const Network<Real>&, const Tensor<Real>&);                 \
    template ForwardTrace<Real> forward_trace(const Network<Real>&, const Tensor<Real>&);                 \
    template std::vector<LayerParams<Real>> backward(const Network<Real>&, const ForwardTrace<Real>&,     \
                                                     const Tensor<Real>&);                                \
    template Network<Real> build_fusion_head(std::span<const std::size_t>, std::size_t, std::uint64_t,    \
                                             const HeadOptions&);                                         \
    template Tensor<Real> concat_inputs(std::span<const Tensor<Real>>);

FACEFUSE_INSTANTIATE(float)
FACEFUSE_INSTANTIATE(double)

#undef FACEFUSE_INSTANTIATE

}  // namespace facefuse
