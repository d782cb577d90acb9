#pragma once

#include <cstdint>
#include <list>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <torch/torch.h>

#include "smokeynet/data/types.hpp"
#include "smokeynet/harness/config.hpp"
#include "smokeynet/objective/loss.hpp"
#include "smokeynet/preprocess/tiling.hpp"

namespace smokeynet {

/// One model input: the frame group ending at a labeled frame.
struct PreparedExample {
    torch::Tensor input;        // (F, N, C, T, T) float
    torch::Tensor tile_labels;  // (N,) float, zeros when absent
    bool tile_labels_present = false;
    float image_label = 0.0f;
    SupervisionKind supervision = SupervisionKind::contour;
    std::string fire_id;
    std::string frame_id;
    int offset_seconds = 0;
};

struct Batch {
    torch::Tensor input;  // (B, F, N, C, T, T)
    LossTargets targets;
    std::vector<std::string> ids;  // "fire_id/frame_id"
};

Batch collate(const std::vector<PreparedExample>& examples);

/// Frames of a set of fires prepared for a given variant: resize/crop,
/// rasterized supervision, optional augmentation, tiling, normalization and
/// the optional background channel.
class FrameDataset {
public:
    FrameDataset(std::vector<FireSequence> fires, DataConfig config, int num_frames, bool background_channel);

    /// Fires of one split of an indexed archive.
    static FrameDataset from_split(const std::vector<FireSequence>& index, const SplitManifest& manifest, Split split,
                                   const DataConfig& config, const VariantConfig& variant);

    std::size_t size() const { return samples_.size(); }
    const std::vector<FireSequence>& fires() const { return fires_; }
    const PreprocessGeometry& geometry() const { return geometry_; }
    /// (fire index, frame index) of sample i.
    std::pair<std::size_t, std::size_t> sample(std::size_t i) const { return samples_.at(i); }

    /// Frame indices of the temporal group ending at `frame`: the nearest
    /// earlier available frames, the first frame standing in for itself.
    std::vector<std::size_t> group_indices(std::size_t fire, std::size_t frame, int count) const;

    /// Builds sample i. With `augment`, one transform drawn from `seed` hits
    /// the whole group and the mask.
    PreparedExample prepare(std::size_t i, bool augment, std::uint64_t seed) const;

    /// Any example with tile supervision (non-EXCLUDED)?
    bool has_tile_supervision() const;

    /// Preprocessed RGB frame (CV_32FC3 in [0, 1], post-crop size).
    cv::Mat load_frame(std::size_t fire, std::size_t frame) const;
    /// Smoke mask of a frame in post-crop coordinates (CV_8UC1, 0/1); empty
    /// Mat for EXCLUDED frames.
    cv::Mat supervision_mask(std::size_t fire, std::size_t frame) const;

private:
    std::vector<FireSequence> fires_;
    DataConfig config_;
    PreprocessGeometry geometry_;
    TileGrid grid_;
    int num_frames_;
    bool background_;
    std::vector<std::pair<std::size_t, std::size_t>> samples_;

    struct Cached {
        cv::Mat image;
        int raw_height = 0;
        int raw_width = 0;
    };
    mutable std::mutex cache_mutex_;
    mutable std::map<std::pair<std::size_t, std::size_t>, Cached> cache_;
    mutable std::list<std::pair<std::size_t, std::size_t>> cache_order_;
    Cached load_cached(std::size_t fire, std::size_t frame) const;
};

/// (H, W, C) float image -> (N, C, T, T) tensor of the grid's tiles.
torch::Tensor tiles_to_tensor(const cv::Mat& image, const TileGeometry& geometry);

}  // namespace smokeynet
