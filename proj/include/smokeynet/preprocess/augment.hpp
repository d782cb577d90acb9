#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgproc.hpp>

#include "smokeynet/common/error.hpp"

namespace smokeynet {

/// Probabilities and magnitudes of the training-time augmentations.
struct AugmentationPolicy {
    double flip_probability = 0.5;
    double crop_probability = 0.5;
    /// Largest fraction of the height a vertical crop removes.
    double crop_max_fraction = 0.1;
    double color_probability = 0.5;
    /// Saturation factor drawn from [1 - m, 1 + m].
    double color_magnitude = 0.1;
    double brightness_contrast_probability = 0.5;
    double brightness_contrast_magnitude = 0.1;
    double blur_probability = 0.5;
    int blur_max_radius = 2;

    static AugmentationPolicy defaults() { return {}; }

    static AugmentationPolicy identity() {
        AugmentationPolicy p;
        p.flip_probability = p.crop_probability = p.color_probability = 0.0;
        p.brightness_contrast_probability = p.blur_probability = 0.0;
        return p;
    }
};

/// One draw of the policy; the same sample is applied to a whole group.
struct AugmentationSample {
    bool flip = false;
    bool crop = false;
    int crop_top = 0;
    int crop_height = 0;
    bool color = false;
    double saturation = 1.0;
    bool brightness_contrast = false;
    double brightness = 1.0;
    double contrast = 1.0;
    int blur_radius = 0;

    static AugmentationSample draw(const AugmentationPolicy& policy, int height, std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const auto symmetric = [&](double m) { return 1.0 + (2.0 * unit(rng) - 1.0) * m; };
        AugmentationSample s;
        s.flip = unit(rng) < policy.flip_probability;
        s.crop = unit(rng) < policy.crop_probability;
        if (s.crop) {
            const int max_removed = static_cast<int>(policy.crop_max_fraction * height);
            const int removed = max_removed > 0 ? std::uniform_int_distribution<int>(1, max_removed)(rng) : 0;
            s.crop_height = height - removed;
            s.crop_top = removed > 0 ? std::uniform_int_distribution<int>(0, removed)(rng) : 0;
            s.crop = removed > 0;
        }
        s.color = unit(rng) < policy.color_probability;
        if (s.color) s.saturation = symmetric(policy.color_magnitude);
        s.brightness_contrast = unit(rng) < policy.brightness_contrast_probability;
        if (s.brightness_contrast) {
            s.brightness = symmetric(policy.brightness_contrast_magnitude);
            s.contrast = symmetric(policy.brightness_contrast_magnitude);
        }
        if (unit(rng) < policy.blur_probability && policy.blur_max_radius > 0) {
            s.blur_radius = std::uniform_int_distribution<int>(1, policy.blur_max_radius)(rng);
        }
        return s;
    }
};

struct AugmentedGroup {
    std::vector<cv::Mat> frames;
    cv::Mat mask;
};

namespace detail {

inline cv::Mat apply_geometric(const cv::Mat& src, const AugmentationSample& s, int interpolation) {
    cv::Mat out = src;
    if (s.crop) {
        cv::Mat window = out(cv::Rect(0, s.crop_top, out.cols, s.crop_height));
        cv::Mat resized;
        cv::resize(window, resized, src.size(), 0, 0, interpolation);
        out = resized;
    }
    if (s.flip) {
        cv::Mat flipped;
        cv::flip(out, flipped, 1);
        out = flipped;
    }
    return out.data == src.data ? src.clone() : out;
}

inline cv::Mat apply_photometric(const cv::Mat& src, const AugmentationSample& s) {
    cv::Mat out = src.clone();
    if (out.channels() == 3 && s.color) {
        cv::Mat gray;
        cv::cvtColor(out, gray, cv::COLOR_RGB2GRAY);
        cv::Mat gray3;
        cv::cvtColor(gray, gray3, cv::COLOR_GRAY2RGB);
        out = gray3 + (out - gray3) * s.saturation;
    }
    if (s.brightness_contrast) {
        out *= s.brightness;
        cv::Mat gray;
        if (out.channels() == 3) {
            cv::cvtColor(out, gray, cv::COLOR_RGB2GRAY);
        } else {
            gray = out;
        }
        const double mean = cv::mean(gray)[0];
        out = (out - cv::Scalar::all(mean)) * s.contrast + cv::Scalar::all(mean);
    }
    if (s.blur_radius > 0) {
        const int k = 2 * s.blur_radius + 1;
        cv::GaussianBlur(out, out, cv::Size(k, k), 0.0);
    }
    if (s.color || s.brightness_contrast || s.blur_radius > 0) {
        cv::min(out, cv::Scalar::all(1.0), out);
        cv::max(out, cv::Scalar::all(0.0), out);
    }
    return out;
}

}  // namespace detail

/// Applies one sampled augmentation to a temporal group of float frames in
/// [0, 1] and to the current frame's smoke mask. Geometric transforms hit
/// every frame and the mask identically (mask resampled nearest-neighbour);
/// photometric transforms touch frames only. Output sizes equal input
/// sizes. Deterministic in `seed`.
inline AugmentedGroup augment_group(std::span<const cv::Mat> frames, const cv::Mat& mask,
                                    const AugmentationPolicy& policy, std::uint64_t seed) {
    if (frames.empty()) {
        return {{}, mask.clone()};
    }
    const cv::Size size = frames.front().size();
    for (const auto& f : frames) {
        if (f.size() != size) throw GeometryError("augment_group: frames differ in size");
    }
    if (!mask.empty() && mask.size() != size) {
        throw GeometryError("augment_group: mask size differs from frame size");
    }
    const AugmentationSample s = AugmentationSample::draw(policy, size.height, seed);
    AugmentedGroup out;
    out.frames.reserve(frames.size());
    for (const auto& f : frames) {
        out.frames.push_back(detail::apply_photometric(detail::apply_geometric(f, s, cv::INTER_LINEAR), s));
    }
    out.mask = mask.empty() ? cv::Mat() : detail::apply_geometric(mask, s, cv::INTER_NEAREST);
    return out;
}

}  // namespace smokeynet
