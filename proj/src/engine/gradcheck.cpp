#include "facefuse/engine/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "facefuse/error.hpp"
#include "facefuse/rng.hpp"

namespace facefuse {

double relative_error(double analytic, double numeric) {
    const double scale = std::max({std::abs(analytic), std::abs(numeric), kRelativeErrorFloor});
    return std::abs(analytic - numeric) / scale;
}

double max_relative_error(std::span<double> values, std::span<const double> analytic,
                          const std::function<double()>& loss, double eps) {
    if (values.size() != analytic.size()) {
        throw DimensionError("gradient check: " + std::to_string(values.size()) + " values but " +
                             std::to_string(analytic.size()) + " analytic gradients");
    }
    double worst = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double saved = values[i];
        values[i] = saved + eps;
        const double plus = loss();
        values[i] = saved - eps;
        const double minus = loss();
        values[i] = saved;
        worst = std::max(worst, relative_error(analytic[i], (plus - minus) / (2 * eps)));
    }
    return worst;
}

double grad_check(std::vector<LayerParams<double>>& params, const LossAndGradients& evaluate, double eps) {
    if (params.empty()) return 0;
    const std::vector<LayerParams<double>> grads = evaluate(params).second;
    if (grads.size() != params.size()) throw DimensionError("gradient check: gradient layer count mismatch");
    auto loss = [&] { return evaluate(params).first; };
    double worst = 0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        worst = std::max(worst, max_relative_error(params[i].weights.data(), grads[i].weights.data(), loss, eps));
        worst = std::max(worst, max_relative_error(params[i].bias.data(), grads[i].bias.data(), loss, eps));
    }
    return worst;
}

namespace {

Tensor<double> random_tensor(Rng& rng, Shape shape, double scale = 1.0) {
    Tensor<double> t(std::move(shape));
    for (double& v : t.data()) v = rng.uniform(-scale, scale);
    return t;
}

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) { return lo + rng.below(hi - lo + 1); }

// Projection loss sum(r * y): the upstream gradient is exactly r.
double project(const Tensor<double>& y, const Tensor<double>& r) {
    double s = 0;
    for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * r[i];
    return s;
}

double conv_case(Rng& rng, double eps) {
    const std::size_t channels = pick(rng, 1, 3), height = pick(rng, 3, 7), width = pick(rng, 3, 7);
    const std::size_t filters = pick(rng, 1, 3);
    const std::size_t kh = pick(rng, 1, std::min<std::size_t>(height, 4));
    const std::size_t kw = pick(rng, 1, std::min<std::size_t>(width, 4));
    ConvGeometry g{1, pick(rng, 0, 2)};
    const std::size_t stride = pick(rng, 1, 2);
    if ((height + 2 * g.padding - kh) % stride == 0 && (width + 2 * g.padding - kw) % stride == 0) g.stride = stride;

    Tensor<double> input = random_tensor(rng, {channels, height, width});
    LayerParams<double> p{LayerKind::conv, random_tensor(rng, {filters, channels, kh, kw}),
                          random_tensor(rng, {filters})};
    const Tensor<double> probe = conv2d_forward(input, p, g);
    const Tensor<double> r = random_tensor(rng, probe.shape());
    const GradientBundle<double> grads = conv2d_backward(input, p, r, g);

    auto loss = [&] { return project(conv2d_forward(input, p, g), r); };
    double worst = max_relative_error(p.weights.data(), grads.params[0].weights.data(), loss, eps);
    worst = std::max(worst, max_relative_error(p.bias.data(), grads.params[0].bias.data(), loss, eps));
    return std::max(worst, max_relative_error(input.data(), grads.input_grad.data(), loss, eps));
}

double fc_case(Rng& rng, double eps) {
    const std::size_t fan_in = pick(rng, 1, 12), units = pick(rng, 1, 6);
    Tensor<double> input = random_tensor(rng, {fan_in});
    LayerParams<double> p{LayerKind::fully_connected, random_tensor(rng, {units, fan_in}), random_tensor(rng, {units})};
    const Tensor<double> r = random_tensor(rng, {units});
    const GradientBundle<double> grads = fc_backward(input, p, r);

    auto loss = [&] { return project(fc_forward(input, p), r); };
    double worst = max_relative_error(p.weights.data(), grads.params[0].weights.data(), loss, eps);
    worst = std::max(worst, max_relative_error(p.bias.data(), grads.params[0].bias.data(), loss, eps));
    return std::max(worst, max_relative_error(input.data(), grads.input_grad.data(), loss, eps));
}

double relu_case(Rng& rng, double eps) {
    Tensor<double> input(Shape{pick(rng, 1, 3), pick(rng, 1, 5), pick(rng, 1, 5)});
    for (double& v : input.data()) {
        // Stay well clear of the kink at 0.
        const double magnitude = rng.uniform(0.01, 1.0);
        v = rng.coin() ? magnitude : -magnitude;
    }
    const Tensor<double> r = random_tensor(rng, input.shape());
    const Tensor<double> grad = relu_backward(input, r);
    auto loss = [&] { return project(relu(input), r); };
    return max_relative_error(input.data(), grad.data(), loss, eps);
}

double maxpool_case(Rng& rng, double eps) {
    const std::size_t window = pick(rng, 1, 3), stride = pick(rng, 1, 3);
    Shape shape{pick(rng, 1, 3), pick(rng, window, 7), pick(rng, window, 7)};
    // Distinct values on a 0.01 grid keep every window free of ties.
    std::vector<double> values(element_count(shape));
    std::iota(values.begin(), values.end(), 0.0);
    for (std::size_t i = values.size(); i > 1; --i) std::swap(values[i - 1], values[rng.below(i)]);
    for (double& v : values) v = v * 0.01 - 0.5;
    Tensor<double> input(shape, std::move(values));

    const PoolResult<double> pooled = maxpool_forward(input, window, stride);
    const Tensor<double> r = random_tensor(rng, pooled.output.shape());
    const Tensor<double> grad = maxpool_backward(pooled.indices, r);
    auto loss = [&] { return project(maxpool_forward(input, window, stride).output, r); };
    return max_relative_error(input.data(), grad.data(), loss, eps);
}

double softmax_case(Rng& rng, double eps) {
    Tensor<double> logits = random_tensor(rng, {pick(rng, 2, 10)}, 3.0);
    const std::size_t label = rng.below(logits.size());
    const SoftmaxLoss<double> result = softmax_cross_entropy(logits, label);
    auto loss = [&] { return softmax_cross_entropy(logits, label).loss; };
    return max_relative_error(logits.data(), result.logit_grad.data(), loss, eps);
}

}  // namespace

std::vector<LayerKindReport> run_gradient_suite(std::uint64_t seed, std::size_t cases_per_kind, double eps) {
    using CaseFn = double (*)(Rng&, double);
    const std::pair<const char*, CaseFn> kinds[] = {
        {"conv", &conv_case},       {"fc", &fc_case},           {"relu", &relu_case},
        {"maxpool", &maxpool_case}, {"softmax_xent", &softmax_case},
    };
    std::vector<LayerKindReport> reports;
    for (const auto& [name, run_case] : kinds) {
        Rng rng(mix_seed(seed, hash_string(name)));
        LayerKindReport report{name, cases_per_kind, 0};
        for (std::size_t c = 0; c < cases_per_kind; ++c) {
            report.max_rel_error = std::max(report.max_rel_error, run_case(rng, eps));
        }
        reports.push_back(report);
    }
    return reports;
}

}  // namespace facefuse
