#pragma once

#include <algorithm>
#include <string>

#include <opencv2/core.hpp>
#include <opencv2/imgproc.hpp>

#include "smokeynet/common/error.hpp"
#include "smokeynet/common/log.hpp"
#include "smokeynet/data/types.hpp"
#include "smokeynet/preprocess/geometry.hpp"

namespace smokeynet {

/// Bilinear resize to the geometry's resize target followed by removal of
/// the top `crop_top` rows. Input sizes outside `expected_inputs` are
/// accepted with a warning.
inline cv::Mat resize_and_crop(const cv::Mat& image, const PreprocessGeometry& geometry = PreprocessGeometry::full()) {
    geometry.validate();
    if (image.empty()) {
        throw GeometryError("resize_and_crop: empty image");
    }
    const bool expected =
        std::any_of(geometry.expected_inputs.begin(), geometry.expected_inputs.end(),
                    [&](const auto& hw) { return hw.first == image.rows && hw.second == image.cols; });
    if (!expected) {
        log::warn("resize_and_crop: unexpected input size ", image.rows, "x", image.cols);
    }
    cv::Mat resized;
    if (image.rows == geometry.resize_height && image.cols == geometry.resize_width) {
        resized = image;
    } else {
        cv::resize(image, resized, cv::Size(geometry.resize_width, geometry.resize_height), 0, 0, cv::INTER_LINEAR);
    }
    return resized(cv::Rect(0, geometry.crop_top, geometry.resize_width, geometry.output_height())).clone();
}

/// Maps a raw-image vertex into post-crop coordinates: scale to the resize
/// target, then shift up by the crop. Points may land outside the frame;
/// rasterization clips them.
inline Point transform_point(const Point& p, int source_height, int source_width, const PreprocessGeometry& geometry) {
    const double sy = static_cast<double>(geometry.resize_height) / source_height;
    const double sx = static_cast<double>(geometry.resize_width) / source_width;
    return {p.x * sx, p.y * sy - geometry.crop_top};
}

inline AnnotationSet transform_annotation(const AnnotationSet& annotation, int source_height, int source_width,
                                          const PreprocessGeometry& geometry) {
    AnnotationSet out;
    for (const auto& polygon : annotation.contours) {
        Polygon mapped;
        mapped.reserve(polygon.size());
        for (const auto& p : polygon) mapped.push_back(transform_point(p, source_height, source_width, geometry));
        out.contours.push_back(std::move(mapped));
    }
    for (const auto& b : annotation.boxes) {
        const Point lo = transform_point({b.xmin, b.ymin}, source_height, source_width, geometry);
        const Point hi = transform_point({b.xmax, b.ymax}, source_height, source_width, geometry);
        out.boxes.push_back({lo.x, lo.y, hi.x, hi.y});
    }
    return out;
}

}  // namespace smokeynet
