#pragma once

#include <chrono>
#include <stdexcept>
#include <vector>

#include "smokeynet/common/error.hpp"

namespace smokeynet {

struct LatencyResult {
    double ms_per_image = 0.0;
    std::vector<double> trial_ms;
};

/// Mean wall-clock time of `run_once` over `trials` calls after `warmup`
/// discarded calls, divided by the images each call processes.
template <class Fn>
LatencyResult measure_latency(Fn&& run_once, int warmup, int trials, int images_per_call = 1) {
    if (trials < 1) throw DefinitionError("latency measurement needs at least one trial");
    if (images_per_call < 1) throw DefinitionError("images_per_call must be positive");
    for (int i = 0; i < warmup; ++i) run_once();
    LatencyResult result;
    result.trial_ms.reserve(trials);
    double total = 0.0;
    for (int i = 0; i < trials; ++i) {
        const auto start = std::chrono::steady_clock::now();
        run_once();
        const auto stop = std::chrono::steady_clock::now();
        const double ms = std::chrono::duration<double, std::milli>(stop - start).count();
        result.trial_ms.push_back(ms);
        total += ms;
    }
    result.ms_per_image = total / trials / images_per_call;
    return result;
}

}  // namespace smokeynet
