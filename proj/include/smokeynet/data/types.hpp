#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace smokeynet {

/// Binary smoke / no-smoke label of a whole image.
enum class Label : std::uint8_t { negative = 0, positive = 1 };

inline constexpr bool is_positive(Label label) { return label == Label::positive; }
inline constexpr std::uint8_t to_bit(Label label) { return static_cast<std::uint8_t>(label); }

/// A vertex in pixel coordinates: x is the column, y the row.
struct Point {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Point&, const Point&) = default;
};

using Polygon = std::vector<Point>;

/// Axis-aligned rectangle, both corners inclusive.
struct Box {
    double xmin = 0.0;
    double ymin = 0.0;
    double xmax = 0.0;
    double ymax = 0.0;
    friend bool operator==(const Box&, const Box&) = default;

    Polygon as_polygon() const {
        return {{xmin, ymin}, {xmax, ymin}, {xmax, ymax}, {xmin, ymax}};
    }
};

/// Smoke annotations of one frame.
struct AnnotationSet {
    std::vector<Polygon> contours;
    std::vector<Box> boxes;

    bool empty() const { return contours.empty() && boxes.empty(); }
    friend bool operator==(const AnnotationSet&, const AnnotationSet&) = default;
};

struct FrameRecord {
    std::string frame_id;
    int offset_seconds = 0;
    std::filesystem::path image_path;
    Label image_label = Label::negative;
    std::optional<AnnotationSet> annotation;
};

/// One fire event: frames strictly ordered by offset, gaps left as gaps.
struct FireSequence {
    std::string fire_id;
    std::string camera_id;
    std::optional<std::string> station;
    std::vector<FrameRecord> frames;
    /// Nominal 60 s slots in the sequence window that have no frame.
    int missing_frames = 0;
    /// Files whose names did not carry a parsable offset.
    int skipped_files = 0;
};

/// Source of tile supervision for one frame.
enum class SupervisionKind : std::uint8_t {
    contour,   ///< filled contour polygons (empty mask for negative frames)
    box_fill,  ///< bounding boxes filled as polygons
    excluded,  ///< positive frame without annotations: no tile-loss terms
};

struct SplitManifest {
    std::set<std::string> train_fires;
    std::set<std::string> val_fires;
    std::set<std::string> test_fires;
    std::set<std::string> omitted_fires;
};

enum class Split { train, val, test, omit };

}  // namespace smokeynet
