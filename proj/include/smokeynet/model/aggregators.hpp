#pragma once

#include <torch/torch.h>

#include "smokeynet/model/layers.hpp"

namespace smokeynet::nn {

/// Single-layer LSTM over each tile's frame sequence, hidden width equal to
/// the input width: (N, F, E) -> (N, E), the last step's output.
class LstmAggregatorImpl : public torch::nn::Module {
public:
    explicit LstmAggregatorImpl(int64_t width);
    torch::Tensor forward(const torch::Tensor& sequence);

private:
    torch::nn::LSTM lstm_{nullptr};
};
TORCH_MODULE(LstmAggregator);

/// Transformer encoder over each tile's frames with learned frame
/// embeddings: (N, F, E) -> (N, E), the current (last) frame's token.
class TransformerAggregatorImpl : public torch::nn::Module {
public:
    TransformerAggregatorImpl(int64_t width, int64_t frames, int64_t depth, int64_t heads, double dropout);
    torch::Tensor forward(const torch::Tensor& sequence);

private:
    torch::Tensor frame_embed_;
    torch::nn::ModuleList blocks_{nullptr};
    torch::nn::LayerNorm norm_{nullptr};
};
TORCH_MODULE(TransformerAggregator);

/// ResNet18-style 3D CNN over the (frames, grid rows, grid cols) volume of
/// tile embeddings; mixes time and neighbouring tiles, keeps the grid
/// resolution and mean-pools time: (B, F, rows*cols, E) -> (B, rows*cols, 512).
class Cnn3dAggregatorImpl : public torch::nn::Module {
public:
    Cnn3dAggregatorImpl(int64_t width, int64_t rows, int64_t cols);
    torch::Tensor forward(const torch::Tensor& embeddings);
    int64_t out_width() const { return 512; }

private:
    int64_t rows_;
    int64_t cols_;
    torch::nn::Sequential stem_{nullptr};
    torch::nn::Sequential layers_{nullptr};
};
TORCH_MODULE(Cnn3dAggregator);

/// Vision transformer across tiles: optional projection E -> d, a learned
/// summary token, optional learned per-tile positional embeddings, `depth`
/// pre-norm blocks. Returns (summary (B, d), tiles (B, N, d)).
class SpatialVitImpl : public torch::nn::Module {
public:
    SpatialVitImpl(int64_t in_width, int64_t width, int64_t tiles, int64_t depth, int64_t heads, int64_t mlp_ratio,
                   bool positional, double dropout);
    std::pair<torch::Tensor, torch::Tensor> forward(const torch::Tensor& tiles);
    int64_t width() const { return width_; }

private:
    int64_t width_;
    bool positional_;
    torch::nn::Linear project_{nullptr};
    torch::Tensor cls_token_;
    torch::Tensor pos_embed_;
    torch::nn::ModuleList blocks_{nullptr};
    torch::nn::LayerNorm norm_{nullptr};
};
TORCH_MODULE(SpatialVit);

/// Concatenates raw-stream and background-stream tile embeddings (2E) and
/// maps them back to E with one affine layer.
class BackgroundFusionImpl : public torch::nn::Module {
public:
    explicit BackgroundFusionImpl(int64_t width);
    torch::Tensor forward(const torch::Tensor& raw, const torch::Tensor& background);
    torch::nn::Linear& linear() { return linear_; }
    int64_t width() const { return width_; }

private:
    int64_t width_;
    torch::nn::Linear linear_{nullptr};
};
TORCH_MODULE(BackgroundFusion);

/// Learned image decision from tile predictions: one affine layer over the
/// tile probabilities, (B, N) logits -> (B,) image logit.
class TileFcHeadImpl : public torch::nn::Module {
public:
    explicit TileFcHeadImpl(int64_t tiles);
    torch::Tensor forward(const torch::Tensor& tile_logits);
    torch::nn::Linear& linear() { return linear_; }

private:
    torch::nn::Linear linear_{nullptr};
};
TORCH_MODULE(TileFcHead);

}  // namespace smokeynet::nn
