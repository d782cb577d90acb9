#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "smokeynet/common/error.hpp"

namespace smokeynet {

/// Confusion counts and the rates derived from them.
struct ClassificationMetrics {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    /// Set when the metric's denominator was zero (value reported as 0).
    bool precision_degenerate = false;
    bool recall_degenerate = false;
    bool f1_degenerate = false;

    std::size_t total() const { return tp + fp + tn + fn; }

    static ClassificationMetrics from_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn) {
        ClassificationMetrics m;
        m.tp = tp;
        m.fp = fp;
        m.tn = tn;
        m.fn = fn;
        const auto total = static_cast<double>(tp + fp + tn + fn);
        m.accuracy = total > 0 ? static_cast<double>(tp + tn) / total : 0.0;
        m.precision_degenerate = tp + fp == 0;
        m.precision = m.precision_degenerate ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
        m.recall_degenerate = tp + fn == 0;
        m.recall = m.recall_degenerate ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
        m.f1 = f1_score(m.precision, m.recall);
        m.f1_degenerate = m.precision + m.recall == 0.0;
        return m;
    }

    /// Harmonic mean; 0 when both inputs are 0.
    static double f1_score(double precision, double recall) {
        return precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
    }
};

namespace detail {
inline void check_prediction_inputs(std::size_t predictions, std::size_t labels) {
    if (predictions == 0) throw DefinitionError("metrics of an empty prediction set are undefined");
    if (predictions != labels) {
        throw DefinitionError("metrics: " + std::to_string(predictions) + " predictions vs " +
                              std::to_string(labels) + " labels");
    }
}
}  // namespace detail

/// Predictions and labels are 0/1 bytes.
inline ClassificationMetrics classification_metrics(std::span<const std::uint8_t> predictions,
                                                    std::span<const std::uint8_t> labels) {
    detail::check_prediction_inputs(predictions.size(), labels.size());
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const bool p = predictions[i] != 0;
        const bool y = labels[i] != 0;
        tp += p && y;
        fp += p && !y;
        tn += !p && !y;
        fn += !p && y;
    }
    return ClassificationMetrics::from_counts(tp, fp, tn, fn);
}

/// Fraction of misclassified images; the checkpoint-selection criterion.
inline double validation_error_rate(std::span<const std::uint8_t> predictions, std::span<const std::uint8_t> labels) {
    detail::check_prediction_inputs(predictions.size(), labels.size());
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) wrong += (predictions[i] != 0) != (labels[i] != 0);
    return static_cast<double>(wrong) / static_cast<double>(predictions.size());
}

}  // namespace smokeynet
