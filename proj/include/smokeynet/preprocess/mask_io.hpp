#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include <opencv2/core.hpp>

#include "smokeynet/common/error.hpp"
#include "smokeynet/preprocess/tiling.hpp"

namespace smokeynet {

/// Mask dump: 16-byte header (8-byte magic "SNMASK01", uint32 LE height,
/// uint32 LE width) followed by one byte per pixel, row-major.
inline constexpr std::array<char, 8> kMaskMagic{'S', 'N', 'M', 'A', 'S', 'K', '0', '1'};

namespace detail {

inline void put_u32(char* dst, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) dst[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
}

inline std::uint32_t get_u32(const char* src) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(src[i])) << (8 * i);
    return v;
}

}  // namespace detail

inline void write_mask_dump(const std::filesystem::path& path, const cv::Mat& mask) {
    CV_Assert(mask.type() == CV_8UC1);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestError("cannot write mask dump " + path.string());
    char header[16];
    std::memcpy(header, kMaskMagic.data(), kMaskMagic.size());
    detail::put_u32(header + 8, static_cast<std::uint32_t>(mask.rows));
    detail::put_u32(header + 12, static_cast<std::uint32_t>(mask.cols));
    out.write(header, sizeof(header));
    for (int r = 0; r < mask.rows; ++r) {
        out.write(reinterpret_cast<const char*>(mask.ptr<std::uint8_t>(r)), mask.cols);
    }
}

inline cv::Mat read_mask_dump(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot open mask dump " + path.string());
    char header[16];
    if (!in.read(header, sizeof(header)) || std::memcmp(header, kMaskMagic.data(), kMaskMagic.size()) != 0) {
        throw ParseError(path.string() + " is not a mask dump");
    }
    const auto rows = static_cast<int>(detail::get_u32(header + 8));
    const auto cols = static_cast<int>(detail::get_u32(header + 12));
    cv::Mat mask(rows, cols, CV_8UC1);
    for (int r = 0; r < rows; ++r) {
        if (!in.read(reinterpret_cast<char*>(mask.ptr<std::uint8_t>(r)), cols)) {
            throw ParseError(path.string() + ": truncated mask dump");
        }
    }
    return mask;
}

/// Tile-label dump: one ASCII '0'/'1' per tile, row-major.
inline std::string format_tile_labels(const TileLabelVector& labels) {
    std::string s;
    s.reserve(labels.size());
    for (auto v : labels) s.push_back(v ? '1' : '0');
    return s;
}

inline TileLabelVector parse_tile_labels(const std::string& text) {
    TileLabelVector labels;
    labels.reserve(text.size());
    for (char c : text) {
        if (c != '0' && c != '1') throw ParseError("tile-label dump may only contain '0' and '1'");
        labels.push_back(c == '1');
    }
    return labels;
}

}  // namespace smokeynet
