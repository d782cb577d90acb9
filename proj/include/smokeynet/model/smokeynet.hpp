#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <torch/torch.h>

#include "smokeynet/model/aggregators.hpp"
#include "smokeynet/model/backbones.hpp"
#include "smokeynet/model/layers.hpp"
#include "smokeynet/model/variant.hpp"

namespace smokeynet {

/// Per-stage tile logits (B, N) and the image logit (B,).
struct ModelOutputs {
    std::optional<torch::Tensor> tile_logits_cnn;
    std::optional<torch::Tensor> tile_logits_temporal;
    std::optional<torch::Tensor> tile_logits_spatial;
    torch::Tensor image_logit;

    /// Present stages in architecture order, named "cnn", "temporal", "spatial".
    std::vector<std::pair<std::string, torch::Tensor>> stages() const;
    /// Tile logits of the deepest present stage.
    torch::Tensor last_stage() const;
};

/// Image logit from tile logits without a learned layer: the maximum tile
/// logit, so the image is positive iff some tile probability exceeds 0.5.
torch::Tensor any_tile_logit(const torch::Tensor& tile_logits);

/// Image logit for TILE_FC (needs the learned head) or ANY_TILE.
torch::Tensor image_decision_from_tiles(const torch::Tensor& tile_logits, ImageHeadMode mode,
                                        nn::TileFcHead* tile_fc = nullptr);

/// The SmokeyNet family: per-tile backbone, optional temporal aggregator,
/// optional spatial aggregator, one tile head per stage and an image head.
///
/// Input: (B, F, N, C, T, T) normalized tiles, F = num_frames, N = tiles,
/// C = 3 or 4 (background channel last).
class SmokeyNetImpl : public torch::nn::Module {
public:
    explicit SmokeyNetImpl(VariantConfig config);

    ModelOutputs forward(const torch::Tensor& input);

    /// Backbone embeddings of the RGB stream, (B, F, N, E).
    torch::Tensor encode_tiles(const torch::Tensor& input);

    const VariantConfig& config() const { return config_; }
    int64_t embedding_width() const { return backbone_->width(); }

    /// Evaluation-mode backbone calls process at most this many tiles at a
    /// time (0 = all at once). Results are identical; peak memory drops.
    void set_eval_chunk(int64_t tiles) { eval_chunk_ = tiles; }

    nn::TileEncoder& backbone() { return *backbone_; }
    nn::BackgroundFusion& fusion() { return fusion_; }
    nn::TileFcHead& tile_fc() { return tile_fc_; }

    /// Top-level submodule names grouped by architecture stage, used to
    /// check that gradients reach every stage.
    std::vector<std::pair<std::string, std::vector<std::string>>> stage_modules() const;

private:
    torch::Tensor run_backbone(nn::TileEncoder& encoder, const torch::Tensor& tiles);
    torch::Tensor run_temporal(const torch::Tensor& embeddings, bool background_stream);
    void check_input(const torch::Tensor& input) const;

    VariantConfig config_;
    int64_t eval_chunk_ = 0;
    std::shared_ptr<nn::TileEncoder> backbone_;
    std::shared_ptr<nn::TileEncoder> bg_backbone_;
    nn::LstmAggregator lstm_{nullptr};
    nn::LstmAggregator bg_lstm_{nullptr};
    nn::TransformerAggregator temporal_transformer_{nullptr};
    nn::TransformerAggregator bg_temporal_transformer_{nullptr};
    nn::Cnn3dAggregator cnn3d_{nullptr};
    nn::BackgroundFusion fusion_{nullptr};
    nn::SpatialVit vit_{nullptr};
    nn::MlpHead cnn_head_{nullptr};
    nn::MlpHead temporal_head_{nullptr};
    nn::MlpHead spatial_head_{nullptr};
    nn::MlpHead image_head_{nullptr};
    nn::TileFcHead tile_fc_{nullptr};
};
TORCH_MODULE(SmokeyNet);

/// Validates the config and builds the model (loading pretrained backbone
/// weights when requested).
SmokeyNet build_model(const VariantConfig& config);

/// Exact number of trainable scalars.
int64_t count_parameters(const torch::nn::Module& module);

/// Parameter count in millions, rounded to one decimal.
double parameters_millions(int64_t count);

}  // namespace smokeynet
