#include "smokeynet/model/smokeynet.hpp"

#include <cmath>

#include "smokeynet/common/error.hpp"
#include "smokeynet/common/log.hpp"

namespace smokeynet {

std::vector<std::pair<std::string, torch::Tensor>> ModelOutputs::stages() const {
    std::vector<std::pair<std::string, torch::Tensor>> out;
    if (tile_logits_cnn) out.emplace_back("cnn", *tile_logits_cnn);
    if (tile_logits_temporal) out.emplace_back("temporal", *tile_logits_temporal);
    if (tile_logits_spatial) out.emplace_back("spatial", *tile_logits_spatial);
    return out;
}

torch::Tensor ModelOutputs::last_stage() const {
    if (tile_logits_spatial) return *tile_logits_spatial;
    if (tile_logits_temporal) return *tile_logits_temporal;
    if (tile_logits_cnn) return *tile_logits_cnn;
    throw ShapeError("model produced no tile logits");
}

torch::Tensor any_tile_logit(const torch::Tensor& tile_logits) { return std::get<0>(tile_logits.max(1)); }

torch::Tensor image_decision_from_tiles(const torch::Tensor& tile_logits, ImageHeadMode mode, nn::TileFcHead* tile_fc) {
    switch (mode) {
        case ImageHeadMode::any_tile: return any_tile_logit(tile_logits);
        case ImageHeadMode::tile_fc:
            if (tile_fc == nullptr || tile_fc->is_empty()) throw ConfigError("tile_fc image head has no layer");
            return (*tile_fc)->forward(tile_logits);
        case ImageHeadMode::cls_token: break;
    }
    throw ConfigError("cls_token image decision needs the spatial aggregator");
}

SmokeyNetImpl::SmokeyNetImpl(VariantConfig config) : config_(std::move(config)) {
    config_.validate();
    const int64_t tiles = config_.num_tiles();
    const bool background = config_.extra_channel == ExtraChannel::background;

    backbone_ = register_module("backbone", nn::make_backbone(config_.backbone, 3, config_.tile_size, config_.dropout));
    const int64_t e = backbone_->width();
    if (background) {
        bg_backbone_ =
            register_module("bg_backbone", nn::make_backbone(config_.backbone, 1, config_.tile_size, config_.dropout));
    }
    cnn_head_ = register_module("cnn_head", nn::MlpHead(e, config_.dropout));

    int64_t tile_width = e;
    switch (config_.temporal) {
        case TemporalAggregator::none: break;
        case TemporalAggregator::lstm:
            lstm_ = register_module("lstm", nn::LstmAggregator(e));
            if (background) bg_lstm_ = register_module("bg_lstm", nn::LstmAggregator(e));
            break;
        case TemporalAggregator::transformer:
            temporal_transformer_ = register_module(
                "temporal_transformer",
                nn::TransformerAggregator(e, config_.num_frames, config_.temporal_transformer_depth,
                                          config_.temporal_transformer_heads, config_.dropout));
            if (background) {
                bg_temporal_transformer_ = register_module(
                    "bg_temporal_transformer",
                    nn::TransformerAggregator(e, config_.num_frames, config_.temporal_transformer_depth,
                                              config_.temporal_transformer_heads, config_.dropout));
            }
            break;
        case TemporalAggregator::cnn3d:
            cnn3d_ = register_module("cnn3d", nn::Cnn3dAggregator(e, config_.tile_rows, config_.tile_cols));
            tile_width = cnn3d_->out_width();
            break;
    }
    if (config_.temporal != TemporalAggregator::none) {
        temporal_head_ = register_module("temporal_head", nn::MlpHead(tile_width, config_.dropout));
    }
    if (background) fusion_ = register_module("fusion", nn::BackgroundFusion(e));

    if (config_.spatial == SpatialAggregator::vit) {
        const int64_t d = std::min<int64_t>(e, config_.vit_width_cap);
        vit_ = register_module("vit", nn::SpatialVit(e, d, tiles, config_.vit_depth, config_.vit_heads,
                                                     config_.vit_mlp_ratio, config_.positional_embedding,
                                                     config_.dropout));
        spatial_head_ = register_module("spatial_head", nn::MlpHead(d, config_.dropout));
        image_head_ = register_module("image_head", nn::MlpHead(d, config_.dropout));
    } else if (config_.image_head == ImageHeadMode::tile_fc) {
        tile_fc_ = register_module("tile_fc", nn::TileFcHead(tiles));
    }
}

void SmokeyNetImpl::check_input(const torch::Tensor& input) const {
    const auto shape = [&] {
        std::string s = "(";
        for (int64_t i = 0; i < input.dim(); ++i) s += (i ? ", " : "") + std::to_string(input.size(i));
        return s + ")";
    };
    if (input.dim() != 6) throw ShapeError("model input must be (B, F, N, C, T, T), got " + shape());
    const int64_t t = config_.tile_size;
    if (input.size(1) != config_.num_frames || input.size(2) != config_.num_tiles() ||
        input.size(3) != config_.input_channels() || input.size(4) != t || input.size(5) != t) {
        throw ShapeError("model input " + shape() + " does not match (B, " + std::to_string(config_.num_frames) + ", " +
                         std::to_string(config_.num_tiles()) + ", " + std::to_string(config_.input_channels()) + ", " +
                         std::to_string(t) + ", " + std::to_string(t) + ")");
    }
}

torch::Tensor SmokeyNetImpl::run_backbone(nn::TileEncoder& encoder, const torch::Tensor& tiles) {
    if (is_training() || eval_chunk_ <= 0 || tiles.size(0) <= eval_chunk_) return encoder.forward(tiles);
    std::vector<torch::Tensor> parts;
    for (int64_t start = 0; start < tiles.size(0); start += eval_chunk_) {
        parts.push_back(encoder.forward(tiles.narrow(0, start, std::min(eval_chunk_, tiles.size(0) - start))));
    }
    return torch::cat(parts, 0);
}

torch::Tensor SmokeyNetImpl::encode_tiles(const torch::Tensor& input) {
    check_input(input);
    const auto b = input.size(0), f = input.size(1), n = input.size(2), t = input.size(4);
    auto rgb = input.narrow(3, 0, 3).reshape({b * f * n, 3, t, t});
    return run_backbone(*backbone_, rgb).reshape({b, f, n, -1});
}

// (B, F, N, E) -> (B, N, E)
torch::Tensor SmokeyNetImpl::run_temporal(const torch::Tensor& embeddings, bool background_stream) {
    const auto b = embeddings.size(0), f = embeddings.size(1), n = embeddings.size(2), e = embeddings.size(3);
    auto seq = embeddings.permute({0, 2, 1, 3}).reshape({b * n, f, e});
    torch::Tensor out;
    if (config_.temporal == TemporalAggregator::lstm) {
        out = background_stream ? bg_lstm_(seq) : lstm_(seq);
    } else {
        out = background_stream ? bg_temporal_transformer_(seq) : temporal_transformer_(seq);
    }
    return out.reshape({b, n, e});
}

ModelOutputs SmokeyNetImpl::forward(const torch::Tensor& input) {
    ModelOutputs out;
    auto emb = encode_tiles(input);  // (B, F, N, E)
    const auto b = input.size(0), f = input.size(1), n = input.size(2), t = input.size(4);
    auto current = emb.select(1, f - 1);
    out.tile_logits_cnn = cnn_head_(current);

    torch::Tensor features = current;
    switch (config_.temporal) {
        case TemporalAggregator::none: break;
        case TemporalAggregator::lstm:
        case TemporalAggregator::transformer:
            features = run_temporal(emb, false);
            out.tile_logits_temporal = temporal_head_(features);
            break;
        case TemporalAggregator::cnn3d:
            features = cnn3d_(emb);
            out.tile_logits_temporal = temporal_head_(features);
            break;
    }

    if (config_.extra_channel == ExtraChannel::background) {
        auto bg = input.narrow(3, 3, 1).reshape({b * f * n, 1, t, t});
        auto bg_emb = run_backbone(*bg_backbone_, bg).reshape({b, f, n, -1});
        auto bg_features =
            config_.temporal == TemporalAggregator::none ? bg_emb.select(1, f - 1) : run_temporal(bg_emb, true);
        features = fusion_(features, bg_features);
    }

    if (config_.spatial == SpatialAggregator::vit) {
        auto [cls, tiles] = vit_(features);
        out.tile_logits_spatial = spatial_head_(tiles);
        out.image_logit = image_head_(cls);
    } else {
        out.image_logit = image_decision_from_tiles(out.last_stage(), config_.image_head, &tile_fc_);
    }
    return out;
}

std::vector<std::pair<std::string, std::vector<std::string>>> SmokeyNetImpl::stage_modules() const {
    std::vector<std::pair<std::string, std::vector<std::string>>> stages;
    const auto present = [&](std::initializer_list<std::string> names) {
        std::vector<std::string> kept;
        const auto children = named_children();
        for (const auto& name : names) {
            if (children.contains(name)) kept.push_back(name);
        }
        return kept;
    };
    stages.emplace_back("cnn", present({"backbone", "bg_backbone", "cnn_head"}));
    if (config_.temporal != TemporalAggregator::none) {
        stages.emplace_back("temporal", present({"lstm", "bg_lstm", "temporal_transformer", "bg_temporal_transformer",
                                                 "cnn3d", "temporal_head"}));
    }
    if (config_.extra_channel == ExtraChannel::background) stages.emplace_back("fusion", present({"fusion"}));
    if (config_.spatial != SpatialAggregator::none) {
        stages.emplace_back("spatial", present({"vit", "spatial_head"}));
        stages.emplace_back("image", present({"image_head"}));
    } else if (config_.image_head == ImageHeadMode::tile_fc) {
        stages.emplace_back("image", present({"tile_fc"}));
    }
    return stages;
}

SmokeyNet build_model(const VariantConfig& config) {
    SmokeyNet model(config);
    if (config.pretrained_backbone) {
        const auto n = nn::load_torchvision_weights(model->backbone(), config.pretrained_weights);
        log::info("loaded " + std::to_string(n) + " pretrained tensors from " + config.pretrained_weights);
        if (config.extra_channel == ExtraChannel::background) {
            auto* bg = model->named_children()["bg_backbone"]->as<nn::TileEncoder>();
            nn::load_torchvision_weights(*bg, config.pretrained_weights);
        }
    }
    return model;
}

int64_t count_parameters(const torch::nn::Module& module) {
    int64_t total = 0;
    for (const auto& p : module.parameters(true)) {
        if (p.requires_grad()) total += p.numel();
    }
    return total;
}

double parameters_millions(int64_t count) { return std::round(static_cast<double>(count) / 1e5) / 10.0; }

}  // namespace smokeynet
