#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "smokeynet/data/types.hpp"
#include "smokeynet/preprocess/geometry.hpp"
#include "smokeynet/preprocess/tiling.hpp"

namespace smokeynet {

/// Desk-scale stand-in for camera imagery: textured terrain below a
/// horizon, sky with drifting cloud-like distractors above it, and from
/// ignition on a translucent plume anchored on the terrain that grows with
/// time and leans downwind.
struct SyntheticSpec {
    int num_fires = 4;
    int frames_per_fire = 81;
    int spacing_seconds = 60;
    /// Raw image size. The default is a real camera size that preprocesses
    /// to 1040x1856.
    int height = 1536;
    int width = 2048;
    bool plume = true;
    int distractors = 2;
    /// Fraction of positive frames annotated with boxes only / not at all.
    double box_only_fraction = 0.0;
    double unannotated_fraction = 0.0;
    /// Fires per split; omitted fires follow the test fires. Empty: about
    /// 60/20/20 with at least one fire in each non-empty split.
    std::vector<int> split_counts;
    std::uint64_t seed = 7;
    /// Geometry the ground-truth tile labels are computed for.
    PreprocessGeometry geometry = PreprocessGeometry::full();

    /// 192x256 raw frames matching PreprocessGeometry::desk().
    static SyntheticSpec desk(int num_fires, int frames_per_fire, std::uint64_t seed);

    void validate() const;
    /// Offsets of frame i: centred on ignition, e.g. -2400..+2400 for 81.
    int offset_of(int frame_index) const;
};

struct SyntheticFrameTruth {
    std::string frame_id;
    int offset_seconds = 0;
    Label label = Label::negative;
    SupervisionKind supervision = SupervisionKind::contour;
    /// Smoke pixels in the raw frame.
    std::size_t mask_pixels = 0;
    /// In `geometry` tile order; empty for EXCLUDED frames.
    TileLabelVector tile_labels;
};

struct SyntheticFireTruth {
    std::string fire_id;
    std::vector<SyntheticFrameTruth> frames;
};

struct SyntheticCorpus {
    std::filesystem::path root;
    std::vector<SyntheticFireTruth> fires;
    SplitManifest manifest;

    std::size_t frame_count() const;
};

/// Writes <root>/<fire_id>/<fire_id>_<offset>.png, annotations.json per fire,
/// <root>/manifest.txt and <root>/tile_labels.txt. Returns the generator's
/// own ground truth.
SyntheticCorpus generate_synthetic_corpus(const SyntheticSpec& spec, const std::filesystem::path& root);

/// Brute-force even-odd point-in-polygon test with closed boundary on
/// integer lattice points; used for the generator's ground-truth masks.
bool point_in_polygon_closed(const Polygon& polygon, double x, double y);

/// Ground-truth mask of the snapped polygons (CV_8UC1, 0/1) by testing every
/// lattice point of each polygon's bounding box.
cv::Mat brute_force_mask(const std::vector<Polygon>& polygons, int height, int width);

/// Reads tile_labels.txt: "fire_id frame_id bits" per line ("-" for none).
std::map<std::pair<std::string, std::string>, TileLabelVector> read_truth_tile_labels(
    const std::filesystem::path& path);

}  // namespace smokeynet
