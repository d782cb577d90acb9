#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include <opencv2/core.hpp>

#include "smokeynet/common/log.hpp"
#include "smokeynet/data/types.hpp"

namespace smokeynet {

namespace detail {

struct IPoint {
    std::int64_t x = 0;
    std::int64_t y = 0;
    friend bool operator==(const IPoint&, const IPoint&) = default;
};

/// Exact rational x-coordinate num/den with den > 0.
struct Crossing {
    std::int64_t num = 0;
    std::int64_t den = 1;
    friend bool operator<(const Crossing& a, const Crossing& b) { return a.num * b.den < b.num * a.den; }
};

inline std::int64_t floor_div(std::int64_t num, std::int64_t den) {
    std::int64_t q = num / den;
    if ((num % den != 0) && ((num < 0) != (den < 0))) --q;
    return q;
}

inline std::int64_t ceil_div(std::int64_t num, std::int64_t den) { return -floor_div(-num, den); }

/// Rounds vertices to the pixel lattice and drops consecutive duplicates
/// (including a closing vertex equal to the first).
inline std::vector<IPoint> snap_polygon(const Polygon& polygon) {
    std::vector<IPoint> out;
    out.reserve(polygon.size());
    for (const auto& p : polygon) {
        const IPoint q{std::llround(p.x), std::llround(p.y)};
        if (out.empty() || !(out.back() == q)) out.push_back(q);
    }
    while (out.size() > 1 && out.front() == out.back()) out.pop_back();
    return out;
}

inline void set_pixel(cv::Mat& mask, std::int64_t x, std::int64_t y) {
    if (x >= 0 && y >= 0 && x < mask.cols && y < mask.rows) {
        mask.at<std::uint8_t>(static_cast<int>(y), static_cast<int>(x)) = 1;
    }
}

}  // namespace detail

/// Fills one polygon into `mask` (CV_8UC1, values 0/1) with the even-odd
/// rule; pixels lying exactly on an edge are included. Vertices are snapped
/// to the nearest pixel first. Returns false for a degenerate polygon
/// (fewer than 3 distinct vertices), which leaves the mask untouched.
inline bool fill_polygon(cv::Mat& mask, const Polygon& polygon) {
    using detail::IPoint;
    CV_Assert(mask.type() == CV_8UC1);
    const std::vector<IPoint> v = detail::snap_polygon(polygon);
    {
        std::vector<IPoint> distinct = v;
        std::sort(distinct.begin(), distinct.end(),
                  [](const IPoint& a, const IPoint& b) { return a.y != b.y ? a.y < b.y : a.x < b.x; });
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        if (distinct.size() < 3) {
            return false;
        }
    }
    const std::size_t n = v.size();
    std::int64_t ymin = v[0].y, ymax = v[0].y;
    for (const auto& p : v) {
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
    }
    ymin = std::max<std::int64_t>(ymin, 0);
    ymax = std::min<std::int64_t>(ymax, mask.rows - 1);

    // Interior: scanline crossings with the half-open rule y0 <= y < y1.
    std::vector<detail::Crossing> crossings;
    for (std::int64_t y = ymin; y <= ymax; ++y) {
        crossings.clear();
        for (std::size_t i = 0; i < n; ++i) {
            const IPoint& a = v[i];
            const IPoint& b = v[(i + 1) % n];
            if (a.y == b.y) continue;
            if ((a.y <= y && y < b.y) || (b.y <= y && y < a.y)) {
                std::int64_t den = b.y - a.y;
                std::int64_t num = a.x * den + (y - a.y) * (b.x - a.x);
                if (den < 0) {
                    den = -den;
                    num = -num;
                }
                crossings.push_back({num, den});
            }
        }
        std::sort(crossings.begin(), crossings.end());
        auto* row = mask.ptr<std::uint8_t>(static_cast<int>(y));
        for (std::size_t k = 0; k + 1 < crossings.size(); k += 2) {
            const std::int64_t x0 = std::max<std::int64_t>(detail::ceil_div(crossings[k].num, crossings[k].den), 0);
            const std::int64_t x1 =
                std::min<std::int64_t>(detail::floor_div(crossings[k + 1].num, crossings[k + 1].den), mask.cols - 1);
            for (std::int64_t x = x0; x <= x1; ++x) row[x] = 1;
        }
    }

    // Boundary: every lattice point on every edge.
    for (std::size_t i = 0; i < n; ++i) {
        const IPoint& a = v[i];
        const IPoint& b = v[(i + 1) % n];
        const std::int64_t dx = b.x - a.x;
        const std::int64_t dy = b.y - a.y;
        const std::int64_t g = std::gcd(std::llabs(dx), std::llabs(dy));
        if (g == 0) {
            detail::set_pixel(mask, a.x, a.y);
            continue;
        }
        const std::int64_t sx = dx / g;
        const std::int64_t sy = dy / g;
        for (std::int64_t k = 0; k <= g; ++k) {
            detail::set_pixel(mask, a.x + k * sx, a.y + k * sy);
        }
    }
    return true;
}

/// Binary smoke mask (CV_8UC1, 0/1) of an annotation already mapped into
/// post-crop coordinates. CONTOUR sources fill the contour polygons, BOX_FILL
/// sources fill the boxes; EXCLUDED sources yield an empty mask.
inline cv::Mat rasterize_regions(const AnnotationSet& annotation, SupervisionKind kind, int height, int width) {
    cv::Mat mask(height, width, CV_8UC1, cv::Scalar(0));
    const auto fill = [&](const Polygon& polygon) {
        if (!fill_polygon(mask, polygon)) {
            log::warn("skipping degenerate polygon with fewer than 3 distinct vertices");
        }
    };
    if (kind == SupervisionKind::contour) {
        for (const auto& polygon : annotation.contours) fill(polygon);
    } else if (kind == SupervisionKind::box_fill) {
        for (const auto& box : annotation.boxes) fill(box.as_polygon());
    }
    return mask;
}

}  // namespace smokeynet
