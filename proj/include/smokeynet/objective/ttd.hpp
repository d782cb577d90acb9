#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "smokeynet/common/log.hpp"
#include "smokeynet/data/types.hpp"

namespace smokeynet {

struct FramePrediction {
    int offset_seconds = 0;
    Label label = Label::negative;
    bool predicted_positive = false;
};

struct FirePredictions {
    std::string fire_id;
    /// Ordered by offset.
    std::vector<FramePrediction> frames;
};

struct FireTtd {
    std::string fire_id;
    double minutes = 0.0;
    /// No positive-labeled frame was predicted positive; minutes holds the
    /// penalty (last positive offset + 1 minute).
    bool undetected = false;
};

struct TtdSummary {
    std::vector<FireTtd> fires;
    /// Fires without any positive-labeled frame.
    std::vector<std::string> excluded;
    double mean_all = 0.0;
    double mean_detected = 0.0;
    std::size_t detected_count = 0;
};

/// Minutes from ignition to the first positive-labeled frame predicted
/// positive, per fire.
inline TtdSummary time_to_detection(const std::vector<FirePredictions>& fires) {
    TtdSummary summary;
    double sum_all = 0.0;
    double sum_detected = 0.0;
    for (const auto& fire : fires) {
        const FramePrediction* first_hit = nullptr;
        const FramePrediction* last_positive = nullptr;
        for (const auto& frame : fire.frames) {
            if (!is_positive(frame.label)) continue;
            last_positive = &frame;
            if (!first_hit && frame.predicted_positive) first_hit = &frame;
        }
        if (!last_positive) {
            log::warn("fire ", fire.fire_id, " has no positive-labeled frames; excluded from time-to-detection");
            summary.excluded.push_back(fire.fire_id);
            continue;
        }
        FireTtd ttd{fire.fire_id, 0.0, first_hit == nullptr};
        if (first_hit) {
            ttd.minutes = first_hit->offset_seconds / 60.0;
            sum_detected += ttd.minutes;
            ++summary.detected_count;
        } else {
            ttd.minutes = last_positive->offset_seconds / 60.0 + 1.0;
        }
        sum_all += ttd.minutes;
        summary.fires.push_back(std::move(ttd));
    }
    if (!summary.fires.empty()) summary.mean_all = sum_all / static_cast<double>(summary.fires.size());
    if (summary.detected_count > 0) summary.mean_detected = sum_detected / static_cast<double>(summary.detected_count);
    return summary;
}

}  // namespace smokeynet
