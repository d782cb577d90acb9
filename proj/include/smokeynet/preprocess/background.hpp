#pragma once

#include <memory>

#include <opencv2/core.hpp>
#include <opencv2/imgproc.hpp>
#include <opencv2/video/background_segm.hpp>

#include "smokeynet/common/error.hpp"

namespace smokeynet {

/// Produces a single-channel foreground map in [0, 1] from consecutive
/// frames. Implementations may keep per-sequence state; one instance must
/// only ever see one camera sequence.
class BackgroundSubtractor {
public:
    virtual ~BackgroundSubtractor() = default;
    virtual cv::Mat apply(const cv::Mat& previous, const cv::Mat& current) = 0;
    /// Forget all history (start of a new sequence).
    virtual void reset() {}
};

namespace detail {

inline cv::Mat to_gray_float(const cv::Mat& image) {
    cv::Mat gray;
    if (image.channels() == 3) {
        cv::cvtColor(image, gray, cv::COLOR_RGB2GRAY);
    } else {
        gray = image;
    }
    cv::Mat out;
    gray.convertTo(out, CV_32F, gray.depth() == CV_8U ? 1.0 / 255.0 : 1.0);
    return out;
}

inline void check_pair(const cv::Mat& previous, const cv::Mat& current) {
    if (previous.size() != current.size()) {
        throw GeometryError("background channel: frames are " + std::to_string(previous.rows) + "x" +
                            std::to_string(previous.cols) + " and " + std::to_string(current.rows) + "x" +
                            std::to_string(current.cols));
    }
}

}  // namespace detail

/// Default subtractor: |gray(current) - gray(previous)| > threshold -> 1.
class FrameDifferenceSubtractor final : public BackgroundSubtractor {
public:
    explicit FrameDifferenceSubtractor(double threshold = 0.05) : threshold_(threshold) {}

    cv::Mat apply(const cv::Mat& previous, const cv::Mat& current) override {
        detail::check_pair(previous, current);
        cv::Mat diff;
        cv::absdiff(detail::to_gray_float(current), detail::to_gray_float(previous), diff);
        cv::Mat foreground;
        cv::threshold(diff, foreground, threshold_, 1.0, cv::THRESH_BINARY);
        return foreground;
    }

private:
    double threshold_;
};

/// Gaussian-mixture subtractor backed by OpenCV's MOG2. Shadows map to 0.5.
class Mog2Subtractor final : public BackgroundSubtractor {
public:
    explicit Mog2Subtractor(int history = 500, double var_threshold = 16.0, bool detect_shadows = true)
        : history_(history), var_threshold_(var_threshold), detect_shadows_(detect_shadows) {
        reset();
    }

    cv::Mat apply(const cv::Mat& previous, const cv::Mat& current) override {
        detail::check_pair(previous, current);
        cv::Mat fg;
        if (!primed_) {
            model_->apply(to_u8(previous), fg);
            primed_ = true;
        }
        model_->apply(to_u8(current), fg);
        cv::Mat out;
        fg.convertTo(out, CV_32F, 1.0 / 255.0);
        return out;
    }

    void reset() override {
        model_ = cv::createBackgroundSubtractorMOG2(history_, var_threshold_, detect_shadows_);
        primed_ = false;
    }

private:
    static cv::Mat to_u8(const cv::Mat& image) {
        if (image.depth() == CV_8U) return image;
        cv::Mat out;
        image.convertTo(out, CV_8U, 255.0);
        return out;
    }

    int history_;
    double var_threshold_;
    bool detect_shadows_;
    cv::Ptr<cv::BackgroundSubtractorMOG2> model_;
    bool primed_ = false;
};

/// One foreground channel for `current` given its previous frame.
inline cv::Mat background_channel(const cv::Mat& previous, const cv::Mat& current, BackgroundSubtractor& subtractor) {
    cv::Mat fg = subtractor.apply(previous, current);
    cv::min(fg, 1.0, fg);
    cv::max(fg, 0.0, fg);
    return fg;
}

}  // namespace smokeynet
