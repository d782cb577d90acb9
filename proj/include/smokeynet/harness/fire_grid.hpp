#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "smokeynet/common/error.hpp"
#include "smokeynet/objective/ttd.hpp"

namespace smokeynet {

enum class CellState { correct, incorrect, missing };

inline const char* to_string(CellState s) {
    switch (s) {
        case CellState::correct: return "correct";
        case CellState::incorrect: return "incorrect";
        case CellState::missing: return "missing";
    }
    return "?";
}

/// One row per fire, one column per nominal frame slot.
struct FireGrid {
    std::vector<int> offsets;
    std::vector<std::string> fire_ids;
    std::vector<std::vector<CellState>> cells;
};

inline FireGrid build_fire_grid(const std::vector<FirePredictions>& fires, int window_seconds = 2400,
                                int spacing_seconds = 60) {
    FireGrid grid;
    for (int t = -window_seconds; t <= window_seconds; t += spacing_seconds) grid.offsets.push_back(t);
    for (const auto& fire : fires) {
        std::vector<CellState> row(grid.offsets.size(), CellState::missing);
        for (const auto& f : fire.frames) {
            const long slot = std::lround(static_cast<double>(f.offset_seconds + window_seconds) / spacing_seconds);
            if (slot < 0 || slot >= static_cast<long>(row.size())) continue;
            const bool correct = f.predicted_positive == is_positive(f.label);
            row[static_cast<std::size_t>(slot)] = correct ? CellState::correct : CellState::incorrect;
        }
        grid.fire_ids.push_back(fire.fire_id);
        grid.cells.push_back(std::move(row));
    }
    return grid;
}

/// Green = correct, red = incorrect, white = no image; 1-pixel grey gaps.
inline cv::Mat render_fire_grid(const FireGrid& grid, int cell = 8) {
    const int cols = static_cast<int>(grid.offsets.size());
    const int rows = static_cast<int>(grid.cells.size());
    cv::Mat img(std::max(1, rows * (cell + 1) + 1), std::max(1, cols * (cell + 1) + 1), CV_8UC3,
                cv::Scalar(200, 200, 200));
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            cv::Scalar color(255, 255, 255);
            if (grid.cells[r][c] == CellState::correct) color = cv::Scalar(60, 170, 60);
            if (grid.cells[r][c] == CellState::incorrect) color = cv::Scalar(50, 50, 220);
            img(cv::Rect(c * (cell + 1) + 1, r * (cell + 1) + 1, cell, cell)).setTo(color);
        }
    }
    return img;
}

inline void write_fire_grid(const FireGrid& grid, const std::filesystem::path& png, const std::filesystem::path& csv) {
    if (!cv::imwrite(png.string(), render_fire_grid(grid))) throw IngestError("cannot write " + png.string());
    std::ofstream out(csv);
    if (!out) throw IngestError("cannot write " + csv.string());
    out << "fire_id,offset_seconds,state\n";
    for (std::size_t r = 0; r < grid.cells.size(); ++r) {
        for (std::size_t c = 0; c < grid.offsets.size(); ++c) {
            out << grid.fire_ids[r] << ',' << grid.offsets[c] << ',' << to_string(grid.cells[r][c]) << '\n';
        }
    }
}

}  // namespace smokeynet
