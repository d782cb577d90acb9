#include "smokeynet/model/backbones.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <iterator>

#include "smokeynet/common/error.hpp"

namespace smokeynet::nn {

namespace {

// ---------------------------------------------------------------- ResNet

class BasicBlockImpl : public torch::nn::Module {
public:
    BasicBlockImpl(int64_t inplanes, int64_t planes, int64_t stride) {
        conv1_ = register_module("conv1", torch::nn::Conv2d(torch::nn::Conv2dOptions(inplanes, planes, 3)
                                                                 .stride(stride).padding(1).bias(false)));
        bn1_ = register_module("bn1", torch::nn::BatchNorm2d(planes));
        conv2_ = register_module("conv2", torch::nn::Conv2d(torch::nn::Conv2dOptions(planes, planes, 3)
                                                                 .padding(1).bias(false)));
        bn2_ = register_module("bn2", torch::nn::BatchNorm2d(planes));
        if (stride != 1 || inplanes != planes) {
            downsample_ = register_module(
                "downsample",
                torch::nn::Sequential(torch::nn::Conv2d(torch::nn::Conv2dOptions(inplanes, planes, 1)
                                                            .stride(stride).bias(false)),
                                      torch::nn::BatchNorm2d(planes)));
        }
    }

    torch::Tensor forward(const torch::Tensor& x) {
        auto out = torch::relu(bn1_(conv1_(x)));
        out = bn2_(conv2_(out));
        return torch::relu(out + (downsample_ ? downsample_->forward(x) : x));
    }

private:
    torch::nn::Conv2d conv1_{nullptr}, conv2_{nullptr};
    torch::nn::BatchNorm2d bn1_{nullptr}, bn2_{nullptr};
    torch::nn::Sequential downsample_{nullptr};
};
TORCH_MODULE(BasicBlock);

class BottleneckImpl : public torch::nn::Module {
public:
    static constexpr int64_t kExpansion = 4;

    BottleneckImpl(int64_t inplanes, int64_t planes, int64_t stride) {
        const int64_t out = planes * kExpansion;
        conv1_ = register_module("conv1", torch::nn::Conv2d(torch::nn::Conv2dOptions(inplanes, planes, 1).bias(false)));
        bn1_ = register_module("bn1", torch::nn::BatchNorm2d(planes));
        conv2_ = register_module("conv2", torch::nn::Conv2d(torch::nn::Conv2dOptions(planes, planes, 3)
                                                                 .stride(stride).padding(1).bias(false)));
        bn2_ = register_module("bn2", torch::nn::BatchNorm2d(planes));
        conv3_ = register_module("conv3", torch::nn::Conv2d(torch::nn::Conv2dOptions(planes, out, 1).bias(false)));
        bn3_ = register_module("bn3", torch::nn::BatchNorm2d(out));
        if (stride != 1 || inplanes != out) {
            downsample_ = register_module(
                "downsample",
                torch::nn::Sequential(
                    torch::nn::Conv2d(torch::nn::Conv2dOptions(inplanes, out, 1).stride(stride).bias(false)),
                    torch::nn::BatchNorm2d(out)));
        }
    }

    torch::Tensor forward(const torch::Tensor& x) {
        auto out = torch::relu(bn1_(conv1_(x)));
        out = torch::relu(bn2_(conv2_(out)));
        out = bn3_(conv3_(out));
        return torch::relu(out + (downsample_ ? downsample_->forward(x) : x));
    }

private:
    torch::nn::Conv2d conv1_{nullptr}, conv2_{nullptr}, conv3_{nullptr};
    torch::nn::BatchNorm2d bn1_{nullptr}, bn2_{nullptr}, bn3_{nullptr};
    torch::nn::Sequential downsample_{nullptr};
};
TORCH_MODULE(Bottleneck);

// ------------------------------------------------------- MobileNet / EfficientNet

int64_t make_divisible(double v, int64_t divisor = 8) {
    int64_t rounded = std::max<int64_t>(divisor, static_cast<int64_t>(v + divisor / 2.0) / divisor * divisor);
    if (rounded < 0.9 * v) rounded += divisor;
    return rounded;
}

constexpr double kMobileNetBnEps = 1e-3;
constexpr double kMobileNetBnMomentum = 0.01;

class InvertedResidualImpl : public torch::nn::Module {
public:
    InvertedResidualImpl(int64_t in, int64_t kernel, int64_t expanded, int64_t out, bool use_se, Activation act,
                         int64_t stride)
        : residual_(stride == 1 && in == out) {
        torch::nn::Sequential block;
        if (expanded != in) {
            block->push_back(conv_bn_act(in, expanded, 1, 1, 1, act, kMobileNetBnEps, kMobileNetBnMomentum));
        }
        block->push_back(conv_bn_act(expanded, expanded, kernel, stride, expanded, act, kMobileNetBnEps,
                                     kMobileNetBnMomentum));
        if (use_se) {
            block->push_back(SqueezeExcitation(expanded, make_divisible(expanded / 4), Activation::relu, true));
        }
        block->push_back(conv_bn_act(expanded, out, 1, 1, 1, Activation::none, kMobileNetBnEps, kMobileNetBnMomentum));
        block_ = register_module("block", block);
    }

    torch::Tensor forward(const torch::Tensor& x) {
        auto y = block_->forward(x);
        return residual_ ? y + x : y;
    }

private:
    bool residual_;
    torch::nn::Sequential block_{nullptr};
};
TORCH_MODULE(InvertedResidual);

class MBConvImpl : public torch::nn::Module {
public:
    MBConvImpl(int64_t expand_ratio, int64_t kernel, int64_t stride, int64_t in, int64_t out)
        : residual_(stride == 1 && in == out) {
        const int64_t expanded = make_divisible(static_cast<double>(in * expand_ratio));
        torch::nn::Sequential block;
        if (expanded != in) block->push_back(conv_bn_act(in, expanded, 1, 1, 1, Activation::silu));
        block->push_back(conv_bn_act(expanded, expanded, kernel, stride, expanded, Activation::silu));
        block->push_back(SqueezeExcitation(expanded, std::max<int64_t>(1, in / 4), Activation::silu, false));
        block->push_back(conv_bn_act(expanded, out, 1, 1, 1, Activation::none));
        block_ = register_module("block", block);
    }

    torch::Tensor forward(const torch::Tensor& x) {
        auto y = block_->forward(x);
        return residual_ ? y + x : y;
    }

private:
    bool residual_;
    torch::nn::Sequential block_{nullptr};
};
TORCH_MODULE(MBConv);

torch::Tensor global_pool(const torch::Tensor& x) { return torch::adaptive_avg_pool2d(x, {1, 1}).flatten(1); }

}  // namespace

// ---------------------------------------------------------------- ResNet

ResNet::ResNet(std::vector<int> layers, bool bottleneck, int64_t in_channels) : bottleneck_(bottleneck) {
    TORCH_CHECK(layers.size() == 4, "ResNet needs four stage depths");
    conv1_ = register_module("conv1", torch::nn::Conv2d(torch::nn::Conv2dOptions(in_channels, 64, 7)
                                                             .stride(2).padding(3).bias(false)));
    bn1_ = register_module("bn1", torch::nn::BatchNorm2d(64));
    layer1_ = register_module("layer1", make_layer(64, layers[0], 1));
    layer2_ = register_module("layer2", make_layer(128, layers[1], 2));
    layer3_ = register_module("layer3", make_layer(256, layers[2], 2));
    layer4_ = register_module("layer4", make_layer(512, layers[3], 2));
    width_ = bottleneck ? 512 * BottleneckImpl::kExpansion : 512;
}

torch::nn::Sequential ResNet::make_layer(int64_t planes, int blocks, int64_t stride) {
    torch::nn::Sequential seq;
    for (int i = 0; i < blocks; ++i) {
        const int64_t s = i == 0 ? stride : 1;
        if (bottleneck_) {
            seq->push_back(Bottleneck(inplanes_, planes, s));
            inplanes_ = planes * BottleneckImpl::kExpansion;
        } else {
            seq->push_back(BasicBlock(inplanes_, planes, s));
            inplanes_ = planes;
        }
    }
    return seq;
}

torch::Tensor ResNet::forward(const torch::Tensor& tiles) {
    auto x = torch::relu(bn1_(conv1_(tiles)));
    x = torch::max_pool2d(x, 3, 2, 1);
    x = layer4_->forward(layer3_->forward(layer2_->forward(layer1_->forward(x))));
    return global_pool(x);
}

// ---------------------------------------------------------------- MobileNetV3

namespace {

struct InvertedResidualSpec {
    int64_t in, kernel, expanded, out;
    bool se;
    Activation act;
    int64_t stride;
};

constexpr auto RE = Activation::relu;
constexpr auto HS = Activation::hardswish;

const std::array<InvertedResidualSpec, 15> kMobileNetV3Large{{
    {16, 3, 16, 16, false, RE, 1},   {16, 3, 64, 24, false, RE, 2},   {24, 3, 72, 24, false, RE, 1},
    {24, 5, 72, 40, true, RE, 2},    {40, 5, 120, 40, true, RE, 1},   {40, 5, 120, 40, true, RE, 1},
    {40, 3, 240, 80, false, HS, 2},  {80, 3, 200, 80, false, HS, 1},  {80, 3, 184, 80, false, HS, 1},
    {80, 3, 184, 80, false, HS, 1},  {80, 3, 480, 112, true, HS, 1},  {112, 3, 672, 112, true, HS, 1},
    {112, 5, 672, 160, true, HS, 2}, {160, 5, 960, 160, true, HS, 1}, {160, 5, 960, 160, true, HS, 1},
}};

// Feature indices feeding the pyramid: the last stride-2 block and the final conv.
constexpr std::size_t kPyramidC4Index = 13;
constexpr std::size_t kPyramidC5Index = 16;

}  // namespace

MobileNetV3::MobileNetV3(int64_t in_channels) {
    torch::nn::Sequential features;
    features->push_back(conv_bn_act(in_channels, 16, 3, 2, 1, HS, kMobileNetBnEps, kMobileNetBnMomentum));
    for (const auto& s : kMobileNetV3Large) {
        features->push_back(InvertedResidual(s.in, s.kernel, s.expanded, s.out, s.se, s.act, s.stride));
    }
    features->push_back(conv_bn_act(160, 960, 1, 1, 1, HS, kMobileNetBnEps, kMobileNetBnMomentum));
    features_ = register_module("features", features);
}

torch::Tensor MobileNetV3::forward(const torch::Tensor& tiles) { return global_pool(features_->forward(tiles)); }

std::pair<torch::Tensor, torch::Tensor> MobileNetV3::forward_pyramid_inputs(const torch::Tensor& tiles) {
    torch::Tensor x = tiles;
    torch::Tensor c4;
    for (std::size_t i = 0; i < features_->size(); ++i) {
        x = features_[i]->as<InvertedResidualImpl>() ? features_[i]->as<InvertedResidualImpl>()->forward(x)
                                                 : features_[i]->as<SeqImpl>()->forward(x);
        if (i == kPyramidC4Index) c4 = x;
    }
    static_assert(kPyramidC5Index == kMobileNetV3Large.size() + 1);
    return {c4, x};
}

int64_t mobilenet_output_size(int64_t tile_size) {
    int64_t s = tile_size;
    for (int i = 0; i < 5; ++i) s = (s + 1) / 2;
    return s;
}

// ---------------------------------------------------------------- FPN

MobileNetFpn::MobileNetFpn(int64_t in_channels, int64_t tile_size) {
    body_ = register_module("body", std::make_shared<MobileNetV3>(in_channels));
    inner_c4_ = register_module("inner_c4", torch::nn::Conv2d(torch::nn::Conv2dOptions(160, kFpnChannels, 1)));
    inner_c5_ = register_module("inner_c5", torch::nn::Conv2d(torch::nn::Conv2dOptions(960, kFpnChannels, 1)));
    layer_c4_ = register_module(
        "layer_c4", torch::nn::Conv2d(torch::nn::Conv2dOptions(kFpnChannels, kFpnChannels, 3).padding(1)));
    layer_c5_ = register_module(
        "layer_c5", torch::nn::Conv2d(torch::nn::Conv2dOptions(kFpnChannels, kFpnChannels, 3).padding(1)));

    const int64_t s = mobilenet_output_size(tile_size);
    const int64_t pooled = (s - 1) / 2 + 1;
    const std::array<int64_t, 3> areas{s * s, s * s, pooled * pooled};
    for (std::size_t i = 0; i < areas.size(); ++i) {
        const int64_t k = (kFpnLevelFeatures + areas[i] - 1) / areas[i];
        torch::nn::Sequential reducer(torch::nn::Conv2d(torch::nn::Conv2dOptions(kFpnChannels, k, 1)),
                                      torch::nn::ReLU(),
                                      torch::nn::Conv2d(torch::nn::Conv2dOptions(k, k, 1)));
        reducers_.push_back(register_module("reduce" + std::to_string(i), reducer));
        level_widths_.push_back(k * areas[i]);
        concat_width_ += k * areas[i];
    }
    project_ = register_module("project", torch::nn::Linear(concat_width_, 960));
}

std::vector<torch::Tensor> MobileNetFpn::pyramid(const torch::Tensor& tiles) {
    auto [c4, c5] = body_->forward_pyramid_inputs(tiles);
    auto top = inner_c5_(c5);
    auto p5 = layer_c5_(top);
    auto lateral = inner_c4_(c4);
    auto up = torch::nn::functional::interpolate(
        top, torch::nn::functional::InterpolateFuncOptions()
                 .size(std::vector<int64_t>{lateral.size(2), lateral.size(3)})
                 .mode(torch::kNearest));
    auto p4 = layer_c4_(lateral + up);
    auto pool = torch::max_pool2d(p5, 1, 2);
    return {p4, p5, pool};
}

torch::Tensor MobileNetFpn::forward(const torch::Tensor& tiles) {
    auto maps = pyramid(tiles);
    std::vector<torch::Tensor> flat;
    flat.reserve(maps.size());
    for (std::size_t i = 0; i < maps.size(); ++i) flat.push_back(reducers_[i]->forward(maps[i]).flatten(1));
    return project_(torch::cat(flat, 1));
}

// ---------------------------------------------------------------- EfficientNet-B0

namespace {

struct MBConvStage {
    int64_t expand, kernel, stride, in, out, layers;
};

const std::array<MBConvStage, 7> kEfficientNetB0{{
    {1, 3, 1, 32, 16, 1},
    {6, 3, 2, 16, 24, 2},
    {6, 5, 2, 24, 40, 2},
    {6, 3, 2, 40, 80, 3},
    {6, 5, 1, 80, 112, 3},
    {6, 5, 2, 112, 192, 4},
    {6, 3, 1, 192, 320, 1},
}};

}  // namespace

EfficientNetB0::EfficientNetB0(int64_t in_channels) {
    torch::nn::Sequential features;
    features->push_back(conv_bn_act(in_channels, 32, 3, 2, 1, Activation::silu));
    for (const auto& st : kEfficientNetB0) {
        Seq stage;
        for (int64_t i = 0; i < st.layers; ++i) {
            stage->push_back(MBConv(st.expand, st.kernel, i == 0 ? st.stride : 1, i == 0 ? st.in : st.out, st.out));
        }
        features->push_back(stage);
    }
    features->push_back(conv_bn_act(320, 1280, 1, 1, 1, Activation::silu));
    features_ = register_module("features", features);
}

torch::Tensor EfficientNetB0::forward(const torch::Tensor& tiles) { return global_pool(features_->forward(tiles)); }

// ---------------------------------------------------------------- DeiT-Tiny

namespace {
constexpr int64_t kDeitPatch = 16;
constexpr int64_t kDeitWidth = 192;
constexpr int64_t kDeitDepth = 12;
constexpr int64_t kDeitHeads = 3;
}  // namespace

DeiTTiny::DeiTTiny(int64_t in_channels, int64_t tile_size, double dropout) {
    if (tile_size % kDeitPatch != 0) throw ConfigError("DeiT tile size must be a multiple of 16");
    const int64_t patches = (tile_size / kDeitPatch) * (tile_size / kDeitPatch);
    patch_embed_ = register_module(
        "patch_embed",
        torch::nn::Conv2d(torch::nn::Conv2dOptions(in_channels, kDeitWidth, kDeitPatch).stride(kDeitPatch)));
    cls_token_ = register_parameter("cls_token", torch::zeros({1, 1, kDeitWidth}));
    pos_embed_ = register_parameter("pos_embed", torch::randn({1, patches + 1, kDeitWidth}) * 0.02);
    blocks_ = register_module("blocks", torch::nn::ModuleList());
    for (int64_t i = 0; i < kDeitDepth; ++i) blocks_->push_back(TransformerBlock(kDeitWidth, kDeitHeads, 4, dropout));
    norm_ = register_module("norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({kDeitWidth}).eps(1e-6)));
}

torch::Tensor DeiTTiny::forward(const torch::Tensor& tiles) {
    auto x = patch_embed_(tiles).flatten(2).transpose(1, 2);
    x = torch::cat({cls_token_.expand({x.size(0), 1, kDeitWidth}), x}, 1) + pos_embed_;
    for (auto& block : *blocks_) x = block->as<TransformerBlockImpl>()->forward(x);
    return norm_(x).select(1, 0);
}

// ---------------------------------------------------------------- factory / weights

std::shared_ptr<TileEncoder> make_backbone(Backbone kind, int64_t in_channels, int64_t tile_size, double dropout) {
    switch (kind) {
        case Backbone::resnet34: return std::make_shared<ResNet>(std::vector<int>{3, 4, 6, 3}, false, in_channels);
        case Backbone::resnet50: return std::make_shared<ResNet>(std::vector<int>{3, 4, 6, 3}, true, in_channels);
        case Backbone::mobilenet_v3_large: return std::make_shared<MobileNetV3>(in_channels);
        case Backbone::mobilenet_fpn: return std::make_shared<MobileNetFpn>(in_channels, tile_size);
        case Backbone::efficientnet_b0: return std::make_shared<EfficientNetB0>(in_channels);
        case Backbone::deit_tiny: return std::make_shared<DeiTTiny>(in_channels, tile_size, dropout);
    }
    throw ConfigError("unknown backbone");
}

namespace {

// timm nests the MLP under "mlp."; our blocks keep fc1/fc2 at block level.
std::string local_name(std::string name) {
    const auto pos = name.find(".mlp.");
    if (pos != std::string::npos) name.erase(pos, 4);
    return name;
}

bool is_classifier(const std::string& name) {
    return name.rfind("fc.", 0) == 0 || name.rfind("classifier.", 0) == 0 || name.rfind("head.", 0) == 0 ||
           name.rfind("head_dist.", 0) == 0 || name == "dist_token";
}

}  // namespace

std::size_t load_torchvision_weights(TileEncoder& encoder, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open pretrained weights: " + path);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    c10::IValue value;
    try {
        value = torch::pickle_load(bytes);
    } catch (const c10::Error&) {
        // OrderedDict state dicts carry _metadata, which the C++ unpickler rejects
        throw ConfigError("cannot unpickle " + path + "; re-save it with torch.save(dict(state_dict), path)");
    }
    if (!value.isGenericDict()) throw ConfigError("pretrained weights are not a state dict: " + path);

    auto& target = encoder.pretrained_target();
    auto params = target.named_parameters(true);
    auto buffers = target.named_buffers(true);
    std::size_t loaded = 0;
    torch::NoGradGuard no_grad;
    for (const auto& item : value.toGenericDict()) {
        const std::string key = item.key().toStringRef();
        if (is_classifier(key) || !item.value().isTensor()) continue;
        const std::string name = local_name(key);
        torch::Tensor* dst = params.find(name);
        if (dst == nullptr) dst = buffers.find(name);
        if (dst == nullptr) {
            if (key.find("num_batches_tracked") != std::string::npos) continue;
            throw ConfigError("pretrained entry has no counterpart: " + key);
        }
        auto src = item.value().toTensor().to(torch::kFloat32);
        if (src.dim() == 4 && dst->dim() == 4 && src.size(1) == 3 && dst->size(1) == 1 &&
            src.size(0) == dst->size(0)) {
            src = src.mean(1, true);  // single-channel stem
        }
        if (src.sizes() != dst->sizes()) {
            throw ConfigError("pretrained entry shape mismatch: " + key);
        }
        dst->copy_(src);
        ++loaded;
    }
    if (loaded == 0) throw ConfigError("no pretrained tensors matched: " + path);
    return loaded;
}

}  // namespace smokeynet::nn
