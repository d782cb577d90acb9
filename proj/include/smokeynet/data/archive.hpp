#pragma once

#include <algorithm>
#include <filesystem>
#include <set>
#include <string>
#include <system_error>
#include <vector>

#include "smokeynet/common/error.hpp"
#include "smokeynet/common/log.hpp"
#include "smokeynet/data/annotations.hpp"
#include "smokeynet/data/frame_name.hpp"
#include "smokeynet/data/types.hpp"

namespace smokeynet {

struct IndexOptions {
    std::string offset_pattern{kDefaultOffsetPattern};
    /// Nominal sequence window used to count missing frames: offsets
    /// -window_seconds .. +window_seconds every spacing_seconds.
    int window_seconds = 2400;
    int spacing_seconds = 60;
    std::set<std::string> image_extensions{".jpg", ".jpeg", ".png", ".bmp", ".tif", ".tiff"};
};

/// Camera id is the last underscore-separated token of a FIgLib fire id
/// (`20200806_BorderFire_om-e-mobo-c` -> `om-e-mobo-c`); the station is its
/// prefix before the first dash (`om`).
inline std::pair<std::string, std::optional<std::string>> camera_from_fire_id(const std::string& fire_id) {
    const auto underscore = fire_id.rfind('_');
    std::string camera = underscore == std::string::npos ? fire_id : fire_id.substr(underscore + 1);
    std::optional<std::string> station;
    if (const auto dash = camera.find('-'); dash != std::string::npos && dash > 0) {
        station = camera.substr(0, dash);
    }
    return {camera, station};
}

/// Number of nominal slots in the window without a frame. Slot s owns the
/// half-open range [s - spacing/2, s - spacing/2 + spacing).
inline int count_missing_frames(const std::vector<FrameRecord>& frames, const IndexOptions& options) {
    int missing = 0;
    const int half = options.spacing_seconds / 2;
    for (int slot = -options.window_seconds; slot <= options.window_seconds; slot += options.spacing_seconds) {
        const int lo = slot - half;
        const auto it = std::lower_bound(frames.begin(), frames.end(), lo,
                                         [](const FrameRecord& f, int v) { return f.offset_seconds < v; });
        if (it == frames.end() || it->offset_seconds >= lo + options.spacing_seconds) {
            ++missing;
        }
    }
    return missing;
}

/// Indexes one fire directory. Unparsable image names are skipped, logged
/// and counted; frames with duplicate offsets keep the first name in
/// lexical order.
inline FireSequence index_fire(const std::filesystem::path& dir, const IndexOptions& options = {}) {
    namespace fs = std::filesystem;
    const FrameNameParser parser(options.offset_pattern);
    FireSequence fire;
    fire.fire_id = dir.filename().string();
    std::tie(fire.camera_id, fire.station) = camera_from_fire_id(fire.fire_id);

    std::error_code ec;
    fs::directory_iterator it(dir, ec);
    if (ec) {
        throw IngestError("cannot read fire directory " + dir.string() + ": " + ec.message());
    }
    std::vector<fs::path> files;
    for (const auto& entry : it) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (options.image_extensions.count(ext) == 0) continue;
        files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    for (const auto& path : files) {
        FrameRecord frame;
        try {
            frame.offset_seconds = parser.parse(path.filename().string());
        } catch (const ParseError& e) {
            log::warn(fire.fire_id, ": skipping frame: ", e.what());
            ++fire.skipped_files;
            continue;
        }
        frame.frame_id = path.stem().string();
        frame.image_path = path;
        frame.image_label = label_from_offset(frame.offset_seconds);
        fire.frames.push_back(std::move(frame));
    }
    std::stable_sort(fire.frames.begin(), fire.frames.end(),
                     [](const FrameRecord& a, const FrameRecord& b) { return a.offset_seconds < b.offset_seconds; });
    const auto dup = std::unique(fire.frames.begin(), fire.frames.end(),
                                 [](const FrameRecord& a, const FrameRecord& b) {
                                     return a.offset_seconds == b.offset_seconds;
                                 });
    if (dup != fire.frames.end()) {
        log::warn(fire.fire_id, ": dropping ", std::distance(dup, fire.frames.end()),
                  " frame(s) with duplicate offsets");
        fire.skipped_files += static_cast<int>(std::distance(dup, fire.frames.end()));
        fire.frames.erase(dup, fire.frames.end());
    }

    const fs::path sidecar_path = dir / kAnnotationFileName;
    if (fs::exists(sidecar_path)) {
        const AnnotationSidecar sidecar = read_annotation_sidecar(sidecar_path);
        if (sidecar.camera_id) fire.camera_id = *sidecar.camera_id;
        if (sidecar.station) fire.station = *sidecar.station;
        for (auto& frame : fire.frames) {
            if (auto found = sidecar.frames.find(frame.frame_id); found != sidecar.frames.end()) {
                frame.annotation = found->second;
            }
        }
    }
    fire.missing_frames = count_missing_frames(fire.frames, options);
    return fire;
}

/// Indexes `<root>/<fire_id>/<frames>`; fires are sorted by fire id.
inline std::vector<FireSequence> index_archive(const std::filesystem::path& root, const IndexOptions& options = {}) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(root, ec)) {
        throw IngestError("archive root " + root.string() + " is not a readable directory");
    }
    fs::directory_iterator it(root, ec);
    if (ec) {
        throw IngestError("cannot read archive root " + root.string() + ": " + ec.message());
    }
    std::vector<fs::path> dirs;
    for (const auto& entry : it) {
        if (entry.is_directory()) dirs.push_back(entry.path());
    }
    std::sort(dirs.begin(), dirs.end());
    std::vector<FireSequence> fires;
    fires.reserve(dirs.size());
    for (const auto& dir : dirs) {
        fires.push_back(index_fire(dir, options));
    }
    return fires;
}

inline std::size_t total_frames(const std::vector<FireSequence>& fires) {
    std::size_t n = 0;
    for (const auto& fire : fires) n += fire.frames.size();
    return n;
}

}  // namespace smokeynet
