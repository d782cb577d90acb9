#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "smokeynet/common/error.hpp"

namespace smokeynet {

enum class Backbone { resnet34, resnet50, mobilenet_v3_large, mobilenet_fpn, efficientnet_b0, deit_tiny };
enum class TemporalAggregator { none, lstm, transformer, cnn3d };
enum class SpatialAggregator { none, vit };
enum class ExtraChannel { none, background };
enum class ImageHeadMode { cls_token, tile_fc, any_tile };

namespace detail {

template <class Enum, std::size_t N>
struct EnumNames {
    std::array<std::pair<Enum, std::string_view>, N> entries;

    std::string_view name(Enum value) const {
        for (const auto& [v, n] : entries) {
            if (v == value) return n;
        }
        return "?";
    }

    Enum parse(std::string_view text, std::string_view what) const {
        std::string lowered(text);
        std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        for (const auto& [v, n] : entries) {
            if (n == lowered) return v;
        }
        std::string options;
        for (const auto& [v, n] : entries) options += (options.empty() ? "" : ", ") + std::string(n);
        throw ConfigError("unknown " + std::string(what) + " '" + std::string(text) + "' (expected one of: " +
                          options + ")");
    }
};

inline constexpr EnumNames<Backbone, 6> kBackboneNames{{{
    {Backbone::resnet34, "resnet34"},
    {Backbone::resnet50, "resnet50"},
    {Backbone::mobilenet_v3_large, "mobilenet"},
    {Backbone::mobilenet_fpn, "mobilenet_fpn"},
    {Backbone::efficientnet_b0, "efficientnet_b0"},
    {Backbone::deit_tiny, "deit_tiny"},
}}};
inline constexpr EnumNames<TemporalAggregator, 4> kTemporalNames{{{
    {TemporalAggregator::none, "none"},
    {TemporalAggregator::lstm, "lstm"},
    {TemporalAggregator::transformer, "transformer"},
    {TemporalAggregator::cnn3d, "cnn3d"},
}}};
inline constexpr EnumNames<SpatialAggregator, 2> kSpatialNames{{{
    {SpatialAggregator::none, "none"},
    {SpatialAggregator::vit, "vit"},
}}};
inline constexpr EnumNames<ExtraChannel, 2> kExtraChannelNames{{{
    {ExtraChannel::none, "none"},
    {ExtraChannel::background, "background"},
}}};
inline constexpr EnumNames<ImageHeadMode, 3> kImageHeadNames{{{
    {ImageHeadMode::cls_token, "cls_token"},
    {ImageHeadMode::tile_fc, "tile_fc"},
    {ImageHeadMode::any_tile, "any_tile"},
}}};

}  // namespace detail

inline std::string_view to_string(Backbone v) { return detail::kBackboneNames.name(v); }
inline std::string_view to_string(TemporalAggregator v) { return detail::kTemporalNames.name(v); }
inline std::string_view to_string(SpatialAggregator v) { return detail::kSpatialNames.name(v); }
inline std::string_view to_string(ExtraChannel v) { return detail::kExtraChannelNames.name(v); }
inline std::string_view to_string(ImageHeadMode v) { return detail::kImageHeadNames.name(v); }

inline Backbone parse_backbone(std::string_view s) { return detail::kBackboneNames.parse(s, "backbone"); }
inline TemporalAggregator parse_temporal(std::string_view s) { return detail::kTemporalNames.parse(s, "temporal aggregator"); }
inline SpatialAggregator parse_spatial(std::string_view s) { return detail::kSpatialNames.parse(s, "spatial aggregator"); }
inline ExtraChannel parse_extra_channel(std::string_view s) { return detail::kExtraChannelNames.parse(s, "extra channel"); }
inline ImageHeadMode parse_image_head(std::string_view s) { return detail::kImageHeadNames.parse(s, "image head mode"); }

/// Declarative description of one architecture variant.
struct VariantConfig {
    Backbone backbone = Backbone::resnet34;
    TemporalAggregator temporal = TemporalAggregator::lstm;
    SpatialAggregator spatial = SpatialAggregator::vit;
    int num_frames = 2;
    ExtraChannel extra_channel = ExtraChannel::none;
    ImageHeadMode image_head = ImageHeadMode::cls_token;
    bool pretrained_backbone = false;
    /// State-dict file (torch.save of a torchvision model) used when
    /// pretrained_backbone is set.
    std::string pretrained_weights;

    // Aggregator hyperparameters.
    int vit_depth = 6;
    int vit_heads = 8;
    int vit_width_cap = 768;
    int vit_mlp_ratio = 4;
    bool positional_embedding = true;
    int temporal_transformer_depth = 1;
    int temporal_transformer_heads = 8;
    double dropout = 0.0;

    // Tile layout the model is built for.
    int tile_size = 224;
    int tile_rows = 5;
    int tile_cols = 9;

    int num_tiles() const { return tile_rows * tile_cols; }
    int input_channels() const { return extra_channel == ExtraChannel::background ? 4 : 3; }

    /// Number of tile-logit stages (1, 2 or 3).
    int stage_count() const {
        return 1 + (temporal != TemporalAggregator::none ? 1 : 0) + (spatial != SpatialAggregator::none ? 1 : 0);
    }

    /// Throws ConfigError naming the conflicting fields.
    void validate() const {
        const auto fail = [](const std::string& message) { throw ConfigError("invalid variant: " + message); };
        if (num_frames < 1 || num_frames > 3) fail("num_frames must be 1, 2 or 3 (got " + std::to_string(num_frames) + ")");
        if (spatial == SpatialAggregator::vit && image_head != ImageHeadMode::cls_token) {
            fail("spatial=vit requires image_head=cls_token (got " + std::string(to_string(image_head)) + ")");
        }
        if (spatial == SpatialAggregator::none && image_head == ImageHeadMode::cls_token) {
            fail("spatial=none requires image_head=tile_fc or any_tile (got cls_token)");
        }
        if (temporal == TemporalAggregator::cnn3d && spatial != SpatialAggregator::none) {
            fail("temporal=cnn3d replaces the spatial aggregator; spatial must be none");
        }
        if (num_frames == 1 && temporal != TemporalAggregator::none) {
            fail("num_frames=1 requires temporal=none (got " + std::string(to_string(temporal)) + ")");
        }
        if (num_frames > 1 && temporal == TemporalAggregator::none) {
            fail("temporal=none requires num_frames=1 (got " + std::to_string(num_frames) + ")");
        }
        if (extra_channel == ExtraChannel::background && temporal == TemporalAggregator::cnn3d) {
            fail("extra_channel=background is not wired for temporal=cnn3d");
        }
        if (pretrained_backbone && pretrained_weights.empty()) {
            fail("pretrained_backbone=true needs pretrained_weights (path to a torchvision state dict)");
        }
        if (pretrained_backbone && backbone == Backbone::deit_tiny) {
            fail("pretrained weights are not supported for deit_tiny");
        }
        if (tile_size < 16 || tile_rows < 1 || tile_cols < 1) fail("tile layout too small");
        if (vit_depth < 1 || vit_heads < 1 || vit_width_cap < vit_heads || vit_mlp_ratio < 1) {
            fail("vit hyperparameters must be positive");
        }
        if (temporal_transformer_depth < 1 || temporal_transformer_heads < 1) {
            fail("temporal transformer hyperparameters must be positive");
        }
        if (dropout < 0.0 || dropout >= 1.0) fail("dropout must lie in [0, 1)");
    }

    /// Short human-readable name in the style of the comparison table.
    std::string describe() const {
        std::string name(to_string(backbone));
        if (temporal != TemporalAggregator::none) name += " + " + std::string(to_string(temporal));
        if (spatial != SpatialAggregator::none) name += " + " + std::string(to_string(spatial));
        if (extra_channel == ExtraChannel::background) name += " (background)";
        name += " (" + std::to_string(num_frames) + (num_frames == 1 ? " frame" : " frames") + ")";
        if (spatial == SpatialAggregator::none) name += " [" + std::string(to_string(image_head)) + "]";
        return name;
    }
};

/// Named variants of the comparison table that this library can build.
namespace variants {

inline VariantConfig flagship() { return {}; }

inline VariantConfig three_frames() {
    VariantConfig v;
    v.num_frames = 3;
    return v;
}

inline VariantConfig with_backbone(Backbone backbone) {
    VariantConfig v;
    v.backbone = backbone;
    return v;
}

inline VariantConfig cnn_only(Backbone backbone = Backbone::resnet34) {
    VariantConfig v;
    v.backbone = backbone;
    v.temporal = TemporalAggregator::none;
    v.spatial = SpatialAggregator::none;
    v.num_frames = 1;
    v.image_head = ImageHeadMode::tile_fc;
    return v;
}

inline VariantConfig cnn_lstm() {
    VariantConfig v;
    v.spatial = SpatialAggregator::none;
    v.image_head = ImageHeadMode::tile_fc;
    return v;
}

inline VariantConfig cnn_vit() {
    VariantConfig v;
    v.temporal = TemporalAggregator::none;
    v.num_frames = 1;
    return v;
}

inline VariantConfig transformer_temporal() {
    VariantConfig v;
    v.temporal = TemporalAggregator::transformer;
    return v;
}

inline VariantConfig cnn3d() {
    VariantConfig v;
    v.temporal = TemporalAggregator::cnn3d;
    v.spatial = SpatialAggregator::none;
    v.image_head = ImageHeadMode::tile_fc;
    return v;
}

inline VariantConfig background_fusion() {
    VariantConfig v;
    v.backbone = Backbone::mobilenet_v3_large;
    v.extra_channel = ExtraChannel::background;
    return v;
}

/// Looks up a preset by name: flagship, three_frames, mobilenet,
/// mobilenet_fpn, efficientnet_b0, deit_tiny, cnn_only, cnn_lstm, cnn_vit,
/// transformer, cnn3d, background, resnet50.
inline VariantConfig preset(std::string_view name) {
    if (name == "flagship") return flagship();
    if (name == "three_frames") return three_frames();
    if (name == "mobilenet") return with_backbone(Backbone::mobilenet_v3_large);
    if (name == "mobilenet_fpn") return with_backbone(Backbone::mobilenet_fpn);
    if (name == "efficientnet_b0") return with_backbone(Backbone::efficientnet_b0);
    if (name == "deit_tiny") return with_backbone(Backbone::deit_tiny);
    if (name == "cnn_only") return cnn_only();
    if (name == "cnn_lstm") return cnn_lstm();
    if (name == "cnn_vit") return cnn_vit();
    if (name == "transformer") return transformer_temporal();
    if (name == "cnn3d") return cnn3d();
    if (name == "background") return background_fusion();
    if (name == "resnet50") return cnn_only(Backbone::resnet50);
    throw ConfigError("unknown variant preset '" + std::string(name) + "'");
}

inline std::vector<std::string> preset_names() {
    return {"flagship", "three_frames", "mobilenet", "mobilenet_fpn", "efficientnet_b0", "deit_tiny", "cnn_only",
            "cnn_lstm", "cnn_vit", "transformer", "cnn3d", "background", "resnet50"};
}

}  // namespace variants

}  // namespace smokeynet
