#pragma once

#include <memory>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "smokeynet/model/layers.hpp"
#include "smokeynet/model/variant.hpp"

namespace smokeynet::nn {

/// Per-tile CNN (or ViT) encoder: (N, C, T, T) -> (N, E).
class TileEncoder : public torch::nn::Module {
public:
    virtual torch::Tensor forward(const torch::Tensor& tiles) = 0;
    /// Embedding width E.
    virtual int64_t width() const = 0;
    /// Submodule whose names follow the torchvision layout.
    virtual torch::nn::Module& pretrained_target() { return *this; }
};

class ResNet : public TileEncoder {
public:
    /// layers = {3, 4, 6, 3}; bottleneck selects ResNet50-style blocks.
    ResNet(std::vector<int> layers, bool bottleneck, int64_t in_channels);
    torch::Tensor forward(const torch::Tensor& tiles) override;
    int64_t width() const override { return width_; }

private:
    torch::nn::Sequential make_layer(int64_t planes, int blocks, int64_t stride);

    bool bottleneck_;
    int64_t inplanes_ = 64;
    int64_t width_ = 0;
    torch::nn::Conv2d conv1_{nullptr};
    torch::nn::BatchNorm2d bn1_{nullptr};
    torch::nn::Sequential layer1_{nullptr}, layer2_{nullptr}, layer3_{nullptr}, layer4_{nullptr};
};

/// MobileNetV3-Large feature extractor; embedding is the pooled 960-channel
/// final map.
class MobileNetV3 : public TileEncoder {
public:
    explicit MobileNetV3(int64_t in_channels);
    torch::Tensor forward(const torch::Tensor& tiles) override;
    int64_t width() const override { return 960; }
    /// Outputs of the last stride-2 stage (160 ch) and the final conv (960 ch).
    std::pair<torch::Tensor, torch::Tensor> forward_pyramid_inputs(const torch::Tensor& tiles);

private:
    torch::nn::Sequential features_{nullptr};
};

/// Spatial size after MobileNetV3's five stride-2 stages.
int64_t mobilenet_output_size(int64_t tile_size);

/// MobileNetV3 with a feature pyramid. Three 256-channel maps are each
/// reduced by two 1x1 convs to ceil(784 / (h*w)) channels (16 at 7x7, 49 at
/// 4x4 for 224 tiles), flattened, concatenated and linearly mapped to 960.
class MobileNetFpn : public TileEncoder {
public:
    MobileNetFpn(int64_t in_channels, int64_t tile_size);
    torch::Tensor forward(const torch::Tensor& tiles) override;
    int64_t width() const override { return 960; }

    /// Flattened width of each pyramid level and of their concatenation.
    const std::vector<int64_t>& level_widths() const { return level_widths_; }
    int64_t concat_width() const { return concat_width_; }
    /// Pyramid maps before reduction (for inspection).
    std::vector<torch::Tensor> pyramid(const torch::Tensor& tiles);
    torch::nn::Module& pretrained_target() override { return *body_; }

private:
    std::shared_ptr<MobileNetV3> body_;
    torch::nn::Conv2d inner_c4_{nullptr}, inner_c5_{nullptr};
    torch::nn::Conv2d layer_c4_{nullptr}, layer_c5_{nullptr};
    std::vector<torch::nn::Sequential> reducers_;
    std::vector<int64_t> level_widths_;
    int64_t concat_width_ = 0;
    torch::nn::Linear project_{nullptr};
};

inline constexpr int64_t kFpnChannels = 256;
inline constexpr int64_t kFpnLevelFeatures = 784;

class EfficientNetB0 : public TileEncoder {
public:
    explicit EfficientNetB0(int64_t in_channels);
    torch::Tensor forward(const torch::Tensor& tiles) override;
    int64_t width() const override { return 1280; }

private:
    torch::nn::Sequential features_{nullptr};
};

/// DeiT-Tiny: 16-pixel patches, width 192, 12 blocks, 3 heads; embedding
/// is the final class token.
class DeiTTiny : public TileEncoder {
public:
    DeiTTiny(int64_t in_channels, int64_t tile_size, double dropout);
    torch::Tensor forward(const torch::Tensor& tiles) override;
    int64_t width() const override { return 192; }

private:
    torch::nn::Conv2d patch_embed_{nullptr};
    torch::Tensor cls_token_;
    torch::Tensor pos_embed_;
    torch::nn::ModuleList blocks_{nullptr};
    torch::nn::LayerNorm norm_{nullptr};
};

std::shared_ptr<TileEncoder> make_backbone(Backbone kind, int64_t in_channels, int64_t tile_size, double dropout);

/// Copies tensors of a torchvision state dict (torch.save file) into the
/// encoder by parameter name. Classifier entries are ignored; a 1-channel
/// stem receives the channel mean of the RGB stem. Returns the number of
/// tensors loaded; throws ConfigError on missing or mis-shaped entries.
std::size_t load_torchvision_weights(TileEncoder& encoder, const std::string& path);

}  // namespace smokeynet::nn
