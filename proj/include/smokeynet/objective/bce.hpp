#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "smokeynet/common/error.hpp"

namespace smokeynet {

/// Probabilities are clamped to [eps, 1 - eps] before taking logarithms.
inline constexpr double kProbabilityEpsilon = 1e-7;

inline double clamp_probability(double p) {
    return std::clamp(p, kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
}

namespace detail {
inline void check_bce_inputs(std::size_t probabilities, std::size_t labels) {
    if (probabilities == 0) throw DefinitionError("weighted BCE of an empty batch is undefined");
    if (probabilities != labels) {
        throw DefinitionError("weighted BCE: " + std::to_string(probabilities) + " probabilities vs " +
                              std::to_string(labels) + " labels");
    }
}
}  // namespace detail

/// -(1/N) * sum(w*y*log p + (1-y)*log(1-p)); the weight touches positive
/// terms only, so w = 1 is the plain binary cross-entropy.
inline double weighted_bce(std::span<const double> probabilities, std::span<const std::uint8_t> labels,
                           double positive_weight) {
    detail::check_bce_inputs(probabilities.size(), labels.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
        const double p = clamp_probability(probabilities[i]);
        sum += labels[i] ? positive_weight * std::log(p) : std::log(1.0 - p);
    }
    return -sum / static_cast<double>(probabilities.size());
}

/// d(weighted_bce)/dp_i. Zero where the clamp is active.
inline std::vector<double> weighted_bce_gradient(std::span<const double> probabilities,
                                                 std::span<const std::uint8_t> labels, double positive_weight) {
    detail::check_bce_inputs(probabilities.size(), labels.size());
    const double n = static_cast<double>(probabilities.size());
    std::vector<double> grad(probabilities.size(), 0.0);
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
        const double p = probabilities[i];
        if (p <= kProbabilityEpsilon || p >= 1.0 - kProbabilityEpsilon) continue;
        grad[i] = labels[i] ? -positive_weight / (p * n) : 1.0 / ((1.0 - p) * n);
    }
    return grad;
}

}  // namespace smokeynet
