#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "facefuse/engine/layers.hpp"

namespace facefuse {

/// Denominator floor for relative error, so that gradients that are zero up
/// to roundoff compare on an absolute scale.
inline constexpr double kRelativeErrorFloor = 1e-6;

/// |analytic - numeric| / max(|analytic|, |numeric|, kRelativeErrorFloor)
double relative_error(double analytic, double numeric);

/// Perturbs each entry of `values` by +-eps, evaluates `loss`, and compares
/// the central difference with `analytic`. Values are restored. Returns the
/// largest relative error (0 for an empty span).
double max_relative_error(std::span<double> values, std::span<const double> analytic,
                          const std::function<double()>& loss, double eps);

/// Loss plus analytic parameter gradients for the given parameters.
using LossAndGradients =
    std::function<std::pair<double, std::vector<LayerParams<double>>>(const std::vector<LayerParams<double>>&)>;

/// Checks every parameter of a differentiable fragment against central
/// differences. A fragment without parameters reports 0.
double grad_check(std::vector<LayerParams<double>>& params, const LossAndGradients& evaluate, double eps);

struct LayerKindReport {
    std::string kind;
    std::size_t cases = 0;
    double max_rel_error = 0;
};

/// Randomized finite-difference suite over conv, fc, relu, maxpool and
/// softmax cross-entropy. Inputs are drawn away from ReLU kinks and pooling
/// ties. Deterministic in `seed`.
std::vector<LayerKindReport> run_gradient_suite(std::uint64_t seed, std::size_t cases_per_kind, double eps = 1e-5);

}  // namespace facefuse
