#pragma once

// Independent reference implementations used by the tests. Deliberately
// naive: they share no code with the library.

#include <cstdint>
#include <cstdlib>
#include <vector>

#include <opencv2/core.hpp>

namespace oracle {

struct IP {
    long long x, y;
};

// Closed even-odd membership of lattice point (x, y), exact integer math.
inline bool inside_closed(const std::vector<IP>& poly, long long x, long long y) {
    const std::size_t n = poly.size();
    bool inside = false;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const IP& a = poly[i];
        const IP& b = poly[j];
        const long long cross = (b.x - a.x) * (y - a.y) - (b.y - a.y) * (x - a.x);
        if (cross == 0 && std::min(a.x, b.x) <= x && x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= y &&
            y <= std::max(a.y, b.y)) {
            return true;
        }
        if ((a.y > y) != (b.y > y)) {
            // x < a.x + (y - a.y)(b.x - a.x)/(b.y - a.y), sign-corrected
            long long lhs = (x - a.x) * (b.y - a.y);
            long long rhs = (y - a.y) * (b.x - a.x);
            if (b.y - a.y < 0) {
                lhs = -lhs;
                rhs = -rhs;
            }
            if (lhs < rhs) inside = !inside;
        }
    }
    return inside;
}

inline cv::Mat polygon_mask(const std::vector<IP>& poly, int height, int width) {
    cv::Mat m = cv::Mat::zeros(height, width, CV_8UC1);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            if (inside_closed(poly, x, y)) m.at<std::uint8_t>(y, x) = 1;
    return m;
}

// Count smoke pixels of each tile by direct scan, row-major over the grid.
inline std::vector<int> tile_counts(const cv::Mat& mask, int tile, int overlap, int rows, int cols) {
    std::vector<int> counts;
    const int stride = tile - overlap;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            int n = 0;
            for (int y = r * stride; y < r * stride + tile; ++y)
                for (int x = c * stride; x < c * stride + tile; ++x) n += mask.at<std::uint8_t>(y, x) != 0;
            counts.push_back(n);
        }
    }
    return counts;
}

struct Confusion {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

inline Confusion recount(const std::vector<std::uint8_t>& pred, const std::vector<std::uint8_t>& label) {
    Confusion c;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] == 1 && label[i] == 1) ++c.tp;
        else if (pred[i] == 1 && label[i] == 0) ++c.fp;
        else if (pred[i] == 0 && label[i] == 0) ++c.tn;
        else ++c.fn;
    }
    return c;
}

}  // namespace oracle
