#include "smokeynet/model/aggregators.hpp"

#include "smokeynet/common/error.hpp"

#include <array>

namespace smokeynet::nn {

// ---------------------------------------------------------------- temporal

LstmAggregatorImpl::LstmAggregatorImpl(int64_t width) {
    lstm_ = register_module("lstm", torch::nn::LSTM(torch::nn::LSTMOptions(width, width).num_layers(1).batch_first(true)));
}

torch::Tensor LstmAggregatorImpl::forward(const torch::Tensor& sequence) {
    auto out = std::get<0>(lstm_->forward(sequence));
    return out.select(1, out.size(1) - 1);
}

TransformerAggregatorImpl::TransformerAggregatorImpl(int64_t width, int64_t frames, int64_t depth, int64_t heads,
                                                     double dropout) {
    frame_embed_ = register_parameter("frame_embed", torch::randn({1, frames, width}) * 0.02);
    blocks_ = register_module("blocks", torch::nn::ModuleList());
    for (int64_t i = 0; i < depth; ++i) blocks_->push_back(TransformerBlock(width, heads, 4, dropout));
    norm_ = register_module("norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({width}).eps(1e-6)));
}

torch::Tensor TransformerAggregatorImpl::forward(const torch::Tensor& sequence) {
    TORCH_CHECK(sequence.size(1) == frame_embed_.size(1), "frame count differs from the configured one");
    auto x = sequence + frame_embed_;
    for (auto& block : *blocks_) x = block->as<TransformerBlockImpl>()->forward(x);
    x = norm_(x);
    return x.select(1, x.size(1) - 1);
}

// ---------------------------------------------------------------- 3D CNN

namespace {

class BasicBlock3dImpl : public torch::nn::Module {
public:
    BasicBlock3dImpl(int64_t in, int64_t out) {
        conv1_ = register_module("conv1", torch::nn::Conv3d(torch::nn::Conv3dOptions(in, out, 3).padding(1).bias(false)));
        bn1_ = register_module("bn1", torch::nn::BatchNorm3d(out));
        conv2_ = register_module("conv2", torch::nn::Conv3d(torch::nn::Conv3dOptions(out, out, 3).padding(1).bias(false)));
        bn2_ = register_module("bn2", torch::nn::BatchNorm3d(out));
        if (in != out) {
            downsample_ = register_module(
                "downsample", torch::nn::Sequential(torch::nn::Conv3d(torch::nn::Conv3dOptions(in, out, 1).bias(false)),
                                                    torch::nn::BatchNorm3d(out)));
        }
    }

    torch::Tensor forward(const torch::Tensor& x) {
        auto y = torch::relu(bn1_(conv1_(x)));
        y = bn2_(conv2_(y));
        return torch::relu(y + (downsample_ ? downsample_->forward(x) : x));
    }

private:
    torch::nn::Conv3d conv1_{nullptr}, conv2_{nullptr};
    torch::nn::BatchNorm3d bn1_{nullptr}, bn2_{nullptr};
    torch::nn::Sequential downsample_{nullptr};
};
TORCH_MODULE(BasicBlock3d);

}  // namespace

Cnn3dAggregatorImpl::Cnn3dAggregatorImpl(int64_t width, int64_t rows, int64_t cols) : rows_(rows), cols_(cols) {
    stem_ = register_module(
        "stem", torch::nn::Sequential(torch::nn::Conv3d(torch::nn::Conv3dOptions(width, 64, 3).padding(1).bias(false)),
                                      torch::nn::BatchNorm3d(64), torch::nn::ReLU()));
    torch::nn::Sequential layers;
    int64_t in = 64;
    for (int64_t out : std::array<int64_t, 4>{64, 128, 256, 512}) {
        layers->push_back(BasicBlock3d(in, out));
        layers->push_back(BasicBlock3d(out, out));
        in = out;
    }
    layers_ = register_module("layers", layers);
}

torch::Tensor Cnn3dAggregatorImpl::forward(const torch::Tensor& embeddings) {
    const auto b = embeddings.size(0);
    const auto f = embeddings.size(1);
    TORCH_CHECK(embeddings.size(2) == rows_ * cols_, "tile count differs from the grid");
    // (B, F, N, E) -> (B, E, F, rows, cols)
    auto x = embeddings.permute({0, 3, 1, 2}).reshape({b, embeddings.size(3), f, rows_, cols_});
    x = layers_->forward(stem_->forward(x)).mean(2);  // (B, 512, rows, cols)
    return x.flatten(2).transpose(1, 2);
}

// ---------------------------------------------------------------- spatial

SpatialVitImpl::SpatialVitImpl(int64_t in_width, int64_t width, int64_t tiles, int64_t depth, int64_t heads,
                               int64_t mlp_ratio, bool positional, double dropout)
    : width_(width), positional_(positional) {
    if (in_width != width) project_ = register_module("project", torch::nn::Linear(in_width, width));
    cls_token_ = register_parameter("cls_token", torch::zeros({1, 1, width}));
    if (positional) pos_embed_ = register_parameter("pos_embed", torch::randn({1, tiles + 1, width}) * 0.02);
    blocks_ = register_module("blocks", torch::nn::ModuleList());
    for (int64_t i = 0; i < depth; ++i) blocks_->push_back(TransformerBlock(width, heads, mlp_ratio, dropout));
    norm_ = register_module("norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({width}).eps(1e-6)));
}

std::pair<torch::Tensor, torch::Tensor> SpatialVitImpl::forward(const torch::Tensor& tiles) {
    auto x = project_ ? project_(tiles) : tiles;
    x = torch::cat({cls_token_.expand({x.size(0), 1, width_}), x}, 1);
    if (positional_) {
        TORCH_CHECK(x.size(1) == pos_embed_.size(1), "tile count differs from the configured one");
        x = x + pos_embed_;
    }
    for (auto& block : *blocks_) x = block->as<TransformerBlockImpl>()->forward(x);
    x = norm_(x);
    return {x.select(1, 0), x.narrow(1, 1, x.size(1) - 1)};
}

// ---------------------------------------------------------------- fusion / heads

BackgroundFusionImpl::BackgroundFusionImpl(int64_t width) : width_(width) {
    linear_ = register_module("linear", torch::nn::Linear(2 * width, width));
}

torch::Tensor BackgroundFusionImpl::forward(const torch::Tensor& raw, const torch::Tensor& background) {
    if (raw.size(-1) != width_ || background.size(-1) != width_) {
        throw ShapeError("background fusion expects two width-" + std::to_string(width_) + " streams, got " +
                         std::to_string(raw.size(-1)) + " and " + std::to_string(background.size(-1)));
    }
    return linear_(torch::cat({raw, background}, -1));
}

TileFcHeadImpl::TileFcHeadImpl(int64_t tiles) { linear_ = register_module("linear", torch::nn::Linear(tiles, 1)); }

torch::Tensor TileFcHeadImpl::forward(const torch::Tensor& tile_logits) {
    return linear_(torch::sigmoid(tile_logits)).squeeze(-1);
}

}  // namespace smokeynet::nn
