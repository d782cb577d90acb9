#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace smokeynet {

struct MirrorOptions {
    /// e.g. http://host:8080/figlib
    std::string base_url;
    /// Paths relative to base_url, e.g. "<fire_id>/<frame>.jpg".
    std::vector<std::string> files;
    std::filesystem::path destination;
    int retries = 3;
};

struct MirrorResult {
    std::size_t downloaded = 0;
    std::size_t resumed = 0;
    std::size_t skipped = 0;
    std::uint64_t bytes = 0;
};

/// Downloads each file into destination/<path>. Partial downloads live in
/// "<path>.part" and continue with an HTTP Range request. Every finished
/// file appends "crc32 size path" to destination/checksums.log.
MirrorResult mirror_files(const MirrorOptions& options);

/// One relative path per line; blank lines and '#' comments skipped.
std::vector<std::string> parse_listing(const std::string& text);

std::uint32_t file_crc32(const std::filesystem::path& path);

}  // namespace smokeynet
