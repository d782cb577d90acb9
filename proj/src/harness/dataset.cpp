#include "smokeynet/harness/dataset.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "smokeynet/data/manifest.hpp"
#include "smokeynet/data/supervision.hpp"
#include "smokeynet/preprocess/augment.hpp"
#include "smokeynet/preprocess/background.hpp"
#include "smokeynet/preprocess/normalize.hpp"
#include "smokeynet/preprocess/rasterize.hpp"
#include "smokeynet/preprocess/resize_crop.hpp"

namespace smokeynet {

torch::Tensor tiles_to_tensor(const cv::Mat& image, const TileGeometry& geometry) {
    check_tile_source(image, geometry, "tiling input");
    cv::Mat contiguous = image.isContinuous() ? image : image.clone();
    const int c = contiguous.channels();
    auto hwc = torch::from_blob(contiguous.data, {contiguous.rows, contiguous.cols, c}, torch::kFloat32);
    const int t = geometry.tile_size, s = geometry.stride();
    // (C, H, W) -> (C, rows, cols, T, T) -> (N, C, T, T)
    auto tiles = hwc.permute({2, 0, 1}).unfold(1, t, s).unfold(2, t, s);
    return tiles.permute({1, 2, 0, 3, 4}).reshape({geometry.count(), c, t, t}).clone();
}

Batch collate(const std::vector<PreparedExample>& examples) {
    if (examples.empty()) throw DefinitionError("cannot collate an empty batch");
    std::vector<torch::Tensor> inputs, tiles, labels, present;
    Batch batch;
    for (const auto& e : examples) {
        inputs.push_back(e.input);
        tiles.push_back(e.tile_labels);
        labels.push_back(torch::tensor(e.image_label));
        present.push_back(torch::tensor(e.tile_labels_present));
        batch.targets.supervision.push_back(e.supervision);
        batch.ids.push_back(e.fire_id + "/" + e.frame_id);
    }
    batch.input = torch::stack(inputs);
    batch.targets.tile_labels = torch::stack(tiles);
    batch.targets.image_labels = torch::stack(labels);
    batch.targets.tile_labels_present = torch::stack(present);
    return batch;
}

FrameDataset::FrameDataset(std::vector<FireSequence> fires, DataConfig config, int num_frames, bool background_channel)
    : fires_(std::move(fires)),
      config_(std::move(config)),
      geometry_(config_.resolved_geometry()),
      grid_(TileGrid::make(geometry_.tiles)),
      num_frames_(num_frames),
      background_(background_channel) {
    if (num_frames_ < 1) throw ConfigError("dataset needs at least one frame per example");
    for (std::size_t f = 0; f < fires_.size(); ++f) {
        for (std::size_t i = 0; i < fires_[f].frames.size(); ++i) samples_.emplace_back(f, i);
    }
}

FrameDataset FrameDataset::from_split(const std::vector<FireSequence>& index, const SplitManifest& manifest,
                                      Split split, const DataConfig& config, const VariantConfig& variant) {
    const auto& wanted = fires_of(manifest, split);
    std::vector<FireSequence> fires;
    for (const auto& fire : index) {
        if (wanted.count(fire.fire_id)) fires.push_back(fire);
    }
    return FrameDataset(std::move(fires), config, variant.num_frames,
                        variant.extra_channel == ExtraChannel::background);
}

std::vector<std::size_t> FrameDataset::group_indices(std::size_t, std::size_t frame, int count) const {
    std::vector<std::size_t> out(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        const auto back = static_cast<std::size_t>(count - 1 - k);
        out[static_cast<std::size_t>(k)] = frame >= back ? frame - back : 0;
    }
    return out;
}

bool FrameDataset::has_tile_supervision() const {
    for (const auto& fire : fires_) {
        for (const auto& frame : fire.frames) {
            if (resolve_supervision(frame) != SupervisionKind::excluded) return true;
        }
    }
    return false;
}

FrameDataset::Cached FrameDataset::load_cached(std::size_t fire, std::size_t frame) const {
    const auto key = std::make_pair(fire, frame);
    {
        std::lock_guard lock(cache_mutex_);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    }
    const auto& record = fires_.at(fire).frames.at(frame);
    cv::Mat bgr = cv::imread(record.image_path.string(), cv::IMREAD_COLOR);
    if (bgr.empty()) throw IngestError("cannot read image " + record.image_path.string());
    cv::Mat rgb, scaled;
    cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
    rgb.convertTo(scaled, CV_32FC3, 1.0 / 255.0);
    Cached entry{resize_and_crop(scaled, geometry_), bgr.rows, bgr.cols};
    if (config_.cache_frames > 0) {
        std::lock_guard lock(cache_mutex_);
        if (cache_.emplace(key, entry).second) {
            cache_order_.push_back(key);
            while (cache_order_.size() > static_cast<std::size_t>(config_.cache_frames)) {
                cache_.erase(cache_order_.front());
                cache_order_.pop_front();
            }
        }
    }
    return entry;
}

cv::Mat FrameDataset::load_frame(std::size_t fire, std::size_t frame) const { return load_cached(fire, frame).image; }

cv::Mat FrameDataset::supervision_mask(std::size_t fire, std::size_t frame) const {
    const auto& record = fires_.at(fire).frames.at(frame);
    const SupervisionKind kind = resolve_supervision(record);
    const int h = geometry_.output_height(), w = geometry_.output_width();
    if (kind == SupervisionKind::excluded) return {};
    if (!is_positive(record.image_label) || !record.annotation) return cv::Mat::zeros(h, w, CV_8UC1);
    const auto cached = load_cached(fire, frame);
    const AnnotationSet transformed =
        transform_annotation(*record.annotation, cached.raw_height, cached.raw_width, geometry_);
    return rasterize_regions(transformed, kind, h, w);
}

PreparedExample FrameDataset::prepare(std::size_t i, bool augment, std::uint64_t seed) const {
    const auto [fire, frame] = samples_.at(i);
    const auto& record = fires_[fire].frames[frame];

    PreparedExample ex;
    ex.fire_id = fires_[fire].fire_id;
    ex.frame_id = record.frame_id;
    ex.offset_seconds = record.offset_seconds;
    ex.image_label = is_positive(record.image_label) ? 1.0f : 0.0f;
    ex.supervision = resolve_supervision(record);

    // Group frames, preceded by one extra earlier frame for the background channel.
    std::vector<std::size_t> indices = group_indices(fire, frame, num_frames_);
    if (background_) indices.insert(indices.begin(), indices.front() > 0 ? indices.front() - 1 : 0);
    std::vector<cv::Mat> frames;
    frames.reserve(indices.size());
    for (auto idx : indices) frames.push_back(load_frame(fire, idx));

    cv::Mat mask = supervision_mask(fire, frame);
    const AugmentationPolicy policy = augment ? config_.augmentation : AugmentationPolicy::identity();
    AugmentedGroup group = augment_group(frames, mask, policy, seed);

    const int n = geometry_.tiles.count();
    if (!group.mask.empty()) {
        const auto labels = tile_labels(group.mask, grid_, geometry_.tile_threshold);
        ex.tile_labels = torch::tensor(std::vector<float>(labels.begin(), labels.end()));
        ex.tile_labels_present = true;
    } else {
        ex.tile_labels = torch::zeros({n});
    }

    const std::size_t first = background_ ? 1 : 0;
    std::vector<torch::Tensor> per_frame;
    std::unique_ptr<BackgroundSubtractor> subtractor;
    if (background_) {
        if (config_.background == "mog2") {
            subtractor = std::make_unique<Mog2Subtractor>();
        } else {
            subtractor = std::make_unique<FrameDifferenceSubtractor>();
        }
    }
    for (std::size_t k = first; k < group.frames.size(); ++k) {
        auto rgb = tiles_to_tensor(normalize(group.frames[k]), geometry_.tiles);
        if (background_) {
            const cv::Mat fg = background_channel(group.frames[k - 1], group.frames[k], *subtractor);
            rgb = torch::cat({rgb, tiles_to_tensor(fg, geometry_.tiles)}, 1);
        }
        per_frame.push_back(rgb);
    }
    ex.input = torch::stack(per_frame);
    return ex;
}

}  // namespace smokeynet
