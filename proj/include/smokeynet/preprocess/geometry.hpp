#pragma once

#include <string>
#include <utility>
#include <vector>

#include "smokeynet/common/error.hpp"

namespace smokeynet {

/// Overlapping square-tile layout of a preprocessed image.
struct TileGeometry {
    int tile_size = 224;
    int overlap = 20;
    int rows = 5;
    int cols = 9;

    int stride() const { return tile_size - overlap; }
    int count() const { return rows * cols; }
    /// Image size whose last tile ends exactly at the edge.
    int height() const { return (rows - 1) * stride() + tile_size; }
    int width() const { return (cols - 1) * stride() + tile_size; }

    void validate() const {
        if (tile_size <= 0 || overlap < 0 || overlap >= tile_size || rows <= 0 || cols <= 0) {
            throw GeometryError("invalid tile geometry: tile " + std::to_string(tile_size) + ", overlap " +
                                std::to_string(overlap) + ", grid " + std::to_string(rows) + "x" +
                                std::to_string(cols));
        }
    }
    friend bool operator==(const TileGeometry&, const TileGeometry&) = default;
};

/// Resize target, top crop and tile layout of the preprocessing pipeline.
struct PreprocessGeometry {
    int resize_height = 1392;
    int resize_width = 1856;
    int crop_top = 352;
    TileGeometry tiles{};
    /// Raw sizes accepted without a warning (height, width).
    std::vector<std::pair<int, int>> expected_inputs{{1536, 2048}, {2048, 3072}};
    /// Pixel-count threshold: a tile is positive iff its smoke count exceeds it.
    int tile_threshold = 250;

    int output_height() const { return resize_height - crop_top; }
    int output_width() const { return resize_width; }

    void validate() const {
        tiles.validate();
        if (crop_top < 0 || output_height() <= 0) {
            throw GeometryError("crop of " + std::to_string(crop_top) + " rows leaves no image after resizing to " +
                                std::to_string(resize_height) + " rows");
        }
        if (output_height() != tiles.height() || output_width() != tiles.width()) {
            throw GeometryError("cropped size " + std::to_string(output_height()) + "x" +
                                std::to_string(output_width()) + " does not match the " + std::to_string(tiles.rows) +
                                "x" + std::to_string(tiles.cols) + " tile grid size " +
                                std::to_string(tiles.height()) + "x" + std::to_string(tiles.width()));
        }
    }

    /// 1536x2048 / 2048x3072 -> 1392x1856 -> crop 352 -> 1040x1856, 45 tiles of 224.
    static PreprocessGeometry full() { return {}; }

    /// Desk-scale layout for CPU tests: 192x256 -> crop 48 -> 144x256, the
    /// same 5x9 grid with 32-pixel tiles overlapping by 4, threshold scaled by
    /// tile area (250 * (32/224)^2 ~= 5).
    static PreprocessGeometry desk() {
        PreprocessGeometry g;
        g.resize_height = 192;
        g.resize_width = 256;
        g.crop_top = 48;
        g.tiles = {32, 4, 5, 9};
        g.expected_inputs = {{192, 256}};
        g.tile_threshold = 5;
        return g;
    }
};

}  // namespace smokeynet
