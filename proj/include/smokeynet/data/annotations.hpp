#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "smokeynet/common/error.hpp"
#include "smokeynet/common/log.hpp"
#include "smokeynet/data/types.hpp"

namespace smokeynet {

/// File name of the per-fire annotation sidecar.
inline constexpr const char* kAnnotationFileName = "annotations.json";

/// Contents of one fire's annotation sidecar.
///
/// Layout:
/// {
///   "camera_id": "...", "station": "...",          (optional)
///   "image_size": [height, width],                 (optional, enables bounds checks)
///   "frames": {
///     "<frame_id>": {"contours": [[[x, y], ...], ...],
///                    "boxes": [[xmin, ymin, xmax, ymax], ...]}
///   }
/// }
struct AnnotationSidecar {
    std::optional<std::string> camera_id;
    std::optional<std::string> station;
    std::optional<std::pair<int, int>> image_size;
    std::map<std::string, AnnotationSet> frames;
};

namespace detail {

inline Point point_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 2) {
        throw ParseError("annotation vertex must be [x, y]");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

inline void check_bounds(const Point& p, const std::pair<int, int>& size, const std::string& frame_id) {
    const auto [height, width] = size;
    if (p.x < 0 || p.y < 0 || p.x > width - 1 || p.y > height - 1) {
        throw ValidationError("annotation vertex (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                              ") of frame '" + frame_id + "' lies outside the " + std::to_string(height) +
                              "x" + std::to_string(width) + " image");
    }
}

}  // namespace detail

inline AnnotationSidecar parse_annotation_sidecar(const nlohmann::json& doc) {
    AnnotationSidecar sidecar;
    try {
        if (doc.contains("camera_id")) sidecar.camera_id = doc.at("camera_id").get<std::string>();
        if (doc.contains("station")) sidecar.station = doc.at("station").get<std::string>();
        if (doc.contains("image_size")) {
            const auto& size = doc.at("image_size");
            sidecar.image_size = std::make_pair(size.at(0).get<int>(), size.at(1).get<int>());
        }
        if (!doc.contains("frames")) {
            return sidecar;
        }
        for (const auto& [frame_id, entry] : doc.at("frames").items()) {
            AnnotationSet set;
            if (entry.contains("contours")) {
                for (const auto& contour : entry.at("contours")) {
                    Polygon polygon;
                    for (const auto& vertex : contour) {
                        polygon.push_back(detail::point_from_json(vertex));
                    }
                    if (polygon.size() < 3) {
                        log::warn("frame ", frame_id, ": dropping contour with ", polygon.size(),
                                  " vertices");
                        continue;
                    }
                    set.contours.push_back(std::move(polygon));
                }
            }
            if (entry.contains("boxes")) {
                for (const auto& b : entry.at("boxes")) {
                    if (!b.is_array() || b.size() != 4) {
                        throw ParseError("box of frame '" + frame_id + "' must be [xmin, ymin, xmax, ymax]");
                    }
                    set.boxes.push_back({b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                                         b[3].get<double>()});
                }
            }
            if (sidecar.image_size) {
                for (const auto& polygon : set.contours) {
                    for (const auto& p : polygon) detail::check_bounds(p, *sidecar.image_size, frame_id);
                }
                for (const auto& box : set.boxes) {
                    detail::check_bounds({box.xmin, box.ymin}, *sidecar.image_size, frame_id);
                    detail::check_bounds({box.xmax, box.ymax}, *sidecar.image_size, frame_id);
                }
            }
            sidecar.frames.emplace(frame_id, std::move(set));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed annotation sidecar: ") + e.what());
    }
    return sidecar;
}

inline AnnotationSidecar read_annotation_sidecar(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IngestError("cannot open annotation sidecar " + path.string());
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("annotation sidecar " + path.string() + ": " + e.what());
    }
    return parse_annotation_sidecar(doc);
}

inline nlohmann::json to_json(const AnnotationSidecar& sidecar) {
    nlohmann::json doc;
    if (sidecar.camera_id) doc["camera_id"] = *sidecar.camera_id;
    if (sidecar.station) doc["station"] = *sidecar.station;
    if (sidecar.image_size) doc["image_size"] = {sidecar.image_size->first, sidecar.image_size->second};
    nlohmann::json frames = nlohmann::json::object();
    for (const auto& [frame_id, set] : sidecar.frames) {
        nlohmann::json entry;
        entry["contours"] = nlohmann::json::array();
        for (const auto& polygon : set.contours) {
            nlohmann::json contour = nlohmann::json::array();
            for (const auto& p : polygon) contour.push_back({p.x, p.y});
            entry["contours"].push_back(std::move(contour));
        }
        entry["boxes"] = nlohmann::json::array();
        for (const auto& b : set.boxes) entry["boxes"].push_back({b.xmin, b.ymin, b.xmax, b.ymax});
        frames[frame_id] = std::move(entry);
    }
    doc["frames"] = std::move(frames);
    return doc;
}

inline void write_annotation_sidecar(const std::filesystem::path& path, const AnnotationSidecar& sidecar) {
    std::ofstream out(path);
    if (!out) {
        throw IngestError("cannot write annotation sidecar " + path.string());
    }
    out << to_json(sidecar).dump(1) << '\n';
}

}  // namespace smokeynet
