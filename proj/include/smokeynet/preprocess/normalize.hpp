#pragma once

#include <opencv2/core.hpp>

namespace smokeynet {

inline constexpr float kNormalizeMean = 0.5f;
inline constexpr float kNormalizeStd = 0.5f;

/// (x - 0.5) / 0.5 elementwise on a float image in [0, 1].
inline cv::Mat normalize(const cv::Mat& image) {
    CV_Assert(image.depth() == CV_32F);
    cv::Mat out;
    image.convertTo(out, image.type(), 1.0 / kNormalizeStd, -kNormalizeMean / kNormalizeStd);
    return out;
}

inline cv::Mat denormalize(const cv::Mat& image) {
    CV_Assert(image.depth() == CV_32F);
    cv::Mat out;
    image.convertTo(out, image.type(), kNormalizeStd, kNormalizeMean);
    return out;
}

}  // namespace smokeynet
