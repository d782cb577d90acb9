#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "smokeynet/common/error.hpp"
#include "smokeynet/preprocess/geometry.hpp"

namespace smokeynet {

struct TileWindow {
    int row = 0;
    int col = 0;
    int y0 = 0;
    int x0 = 0;
};

/// Row-major list of tile windows for a geometry.
struct TileGrid {
    TileGeometry geometry;
    std::vector<TileWindow> tiles;

    static TileGrid make(const TileGeometry& geometry) {
        geometry.validate();
        TileGrid grid{geometry, {}};
        grid.tiles.reserve(geometry.count());
        for (int r = 0; r < geometry.rows; ++r) {
            for (int c = 0; c < geometry.cols; ++c) {
                grid.tiles.push_back({r, c, r * geometry.stride(), c * geometry.stride()});
            }
        }
        return grid;
    }

    cv::Rect rect(std::size_t index) const {
        const auto& t = tiles.at(index);
        return {t.x0, t.y0, geometry.tile_size, geometry.tile_size};
    }
};

/// Binary per-tile labels in TileGrid order.
using TileLabelVector = std::vector<std::uint8_t>;

struct TiledImage {
    TileGrid grid;
    /// Views into the source image (no copy).
    std::vector<cv::Mat> tiles;
};

inline void check_tile_source(const cv::Mat& image, const TileGeometry& geometry, const char* what) {
    if (image.rows != geometry.height() || image.cols != geometry.width()) {
        throw GeometryError(std::string(what) + " is " + std::to_string(image.rows) + "x" +
                            std::to_string(image.cols) + ", expected " + std::to_string(geometry.height()) + "x" +
                            std::to_string(geometry.width()));
    }
}

/// Splits an image into the overlapping tile windows of `geometry`.
inline TiledImage tile(const cv::Mat& image, const TileGeometry& geometry = {}) {
    check_tile_source(image, geometry, "tile input");
    TiledImage out{TileGrid::make(geometry), {}};
    out.tiles.reserve(out.grid.tiles.size());
    for (std::size_t i = 0; i < out.grid.tiles.size(); ++i) {
        out.tiles.push_back(image(out.grid.rect(i)));
    }
    return out;
}

/// Writes tiles back into a canvas; overlapping windows overwrite each
/// other, so the result equals the source iff overlaps agree.
inline cv::Mat untile(const TiledImage& tiled) {
    const auto& g = tiled.grid.geometry;
    cv::Mat canvas(g.height(), g.width(), tiled.tiles.at(0).type(), cv::Scalar::all(0));
    for (std::size_t i = 0; i < tiled.tiles.size(); ++i) {
        tiled.tiles[i].copyTo(canvas(tiled.grid.rect(i)));
    }
    return canvas;
}

/// Tile label is positive iff the number of mask pixels inside the tile
/// window is strictly greater than `threshold`. Overlap pixels count for
/// every tile that contains them.
inline TileLabelVector tile_labels(const cv::Mat& mask, const TileGrid& grid, int threshold) {
    CV_Assert(mask.type() == CV_8UC1);
    check_tile_source(mask, grid.geometry, "smoke mask");
    // Summed-area table over the binary mask.
    std::vector<std::int64_t> sat(static_cast<std::size_t>(mask.rows + 1) * (mask.cols + 1), 0);
    const auto at = [&](int r, int c) -> std::int64_t& {
        return sat[static_cast<std::size_t>(r) * (mask.cols + 1) + c];
    };
    for (int r = 0; r < mask.rows; ++r) {
        const auto* row = mask.ptr<std::uint8_t>(r);
        std::int64_t running = 0;
        for (int c = 0; c < mask.cols; ++c) {
            running += row[c] != 0;
            at(r + 1, c + 1) = at(r, c + 1) + running;
        }
    }
    const int size = grid.geometry.tile_size;
    TileLabelVector labels;
    labels.reserve(grid.tiles.size());
    for (const auto& t : grid.tiles) {
        const std::int64_t count = at(t.y0 + size, t.x0 + size) - at(t.y0, t.x0 + size) -
                                   at(t.y0 + size, t.x0) + at(t.y0, t.x0);
        labels.push_back(count > threshold ? 1 : 0);
    }
    return labels;
}

inline TileLabelVector tile_labels(const cv::Mat& mask, const PreprocessGeometry& geometry) {
    return tile_labels(mask, TileGrid::make(geometry.tiles), geometry.tile_threshold);
}

}  // namespace smokeynet
