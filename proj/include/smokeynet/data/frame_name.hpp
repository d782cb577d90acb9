#pragma once

#include <cstdio>
#include <regex>
#include <string>
#include <string_view>

#include "smokeynet/common/error.hpp"
#include "smokeynet/data/types.hpp"

namespace smokeynet {

/// Canonical frame-name offset token: an underscore, a sign, zero-padded
/// seconds, then the file extension, e.g. `1499546263_+00060.jpg`.
inline constexpr std::string_view kDefaultOffsetPattern = R"(_([+-]\d+)\.[A-Za-z0-9]+$)";

/// Extracts the signed offset (seconds relative to ignition) from a frame
/// file name. The pattern's first capture group must hold the signed integer.
class FrameNameParser {
public:
    explicit FrameNameParser(std::string_view pattern = kDefaultOffsetPattern)
        : pattern_text_(pattern), pattern_(pattern_text_, std::regex::ECMAScript) {}

    const std::string& pattern() const { return pattern_text_; }

    int parse(std::string_view frame_name) const {
        std::match_results<std::string_view::const_iterator> match;
        if (!std::regex_search(frame_name.begin(), frame_name.end(), match, pattern_) ||
            match.size() < 2 || !match[1].matched) {
            throw ParseError("no offset token in frame name '" + std::string(frame_name) + "'");
        }
        const std::string token = match[1].str();
        try {
            std::size_t used = 0;
            const long value = std::stol(token, &used);
            if (used != token.size()) {
                throw std::invalid_argument(token);
            }
            return static_cast<int>(value);
        } catch (const std::exception&) {
            throw ParseError("malformed offset token '" + token + "' in frame name '" +
                             std::string(frame_name) + "'");
        }
    }

private:
    std::string pattern_text_;
    std::regex pattern_;
};

inline int parse_frame_offset(std::string_view frame_name) {
    static const FrameNameParser parser;
    return parser.parse(frame_name);
}

/// Signed, zero-padded seconds token: 60 -> "+00060", -2400 -> "-02400".
inline std::string format_offset_token(int offset_seconds) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%c%05d", offset_seconds < 0 ? '-' : '+',
                  offset_seconds < 0 ? -offset_seconds : offset_seconds);
    return buffer;
}

/// Writer side of the canonical convention.
inline std::string format_frame_name(std::string_view prefix, int offset_seconds,
                                     std::string_view extension = "png") {
    return std::string(prefix) + "_" + format_offset_token(offset_seconds) + "." +
           std::string(extension);
}

/// Frames at or after ignition (offset >= 0) show smoke.
inline constexpr Label label_from_offset(int offset_seconds) {
    return offset_seconds >= 0 ? Label::positive : Label::negative;
}

}  // namespace smokeynet
