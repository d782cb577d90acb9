#pragma once

#include <functional>

#include <torch/torch.h>

namespace smokeynet::nn {

enum class Activation { none, relu, hardswish, silu };

/// Sequential with a concrete forward, so it can nest inside another
/// Sequential.
class SeqImpl : public torch::nn::SequentialImpl {
public:
    using SequentialImpl::SequentialImpl;
    torch::Tensor forward(torch::Tensor x) { return SequentialImpl::forward(std::move(x)); }
};
TORCH_MODULE(Seq);

/// Conv2d (no bias) + BatchNorm2d + optional activation, laid out as a
/// Sequential with children "0", "1", "2" so torchvision state dicts map
/// onto it by name.
Seq conv_bn_act(int64_t in, int64_t out, int64_t kernel, int64_t stride = 1, int64_t groups = 1,
                                  Activation activation = Activation::relu, double bn_eps = 1e-5,
                                  double bn_momentum = 0.1);

/// Channel attention: global pool, 1x1 reduce, activation, 1x1 expand,
/// gate. `hard_gate` selects hardsigmoid (MobileNetV3) over sigmoid.
class SqueezeExcitationImpl : public torch::nn::Module {
public:
    SqueezeExcitationImpl(int64_t channels, int64_t squeeze, Activation activation, bool hard_gate);
    torch::Tensor forward(const torch::Tensor& x);

private:
    torch::nn::Conv2d fc1_{nullptr};
    torch::nn::Conv2d fc2_{nullptr};
    Activation activation_;
    bool hard_gate_;
};
TORCH_MODULE(SqueezeExcitation);

/// Multi-head self-attention over (batch, tokens, width).
class SelfAttentionImpl : public torch::nn::Module {
public:
    SelfAttentionImpl(int64_t width, int64_t heads, double dropout);
    torch::Tensor forward(const torch::Tensor& x);

private:
    int64_t heads_;
    double dropout_;
    torch::nn::Linear qkv_{nullptr};
    torch::nn::Linear proj_{nullptr};
};
TORCH_MODULE(SelfAttention);

/// Pre-norm transformer encoder block (attention + GELU MLP, residuals).
class TransformerBlockImpl : public torch::nn::Module {
public:
    TransformerBlockImpl(int64_t width, int64_t heads, int64_t mlp_ratio, double dropout, double ln_eps = 1e-6);
    torch::Tensor forward(const torch::Tensor& x);

private:
    torch::nn::LayerNorm norm1_{nullptr};
    SelfAttention attn_{nullptr};
    torch::nn::LayerNorm norm2_{nullptr};
    torch::nn::Linear fc1_{nullptr};
    torch::nn::Linear fc2_{nullptr};
    torch::nn::Dropout drop_{nullptr};
};
TORCH_MODULE(TransformerBlock);

/// Tile / image head: widths 256, 64, 1 with ReLU in between. Returns logits
/// with the trailing unit dimension removed.
class MlpHeadImpl : public torch::nn::Module {
public:
    explicit MlpHeadImpl(int64_t in_width, double dropout = 0.0);
    torch::Tensor forward(const torch::Tensor& x);
    int64_t in_width() const { return in_width_; }

private:
    int64_t in_width_;
    torch::nn::Sequential layers_{nullptr};
};
TORCH_MODULE(MlpHead);

inline constexpr int64_t kHeadHidden1 = 256;
inline constexpr int64_t kHeadHidden2 = 64;

}  // namespace smokeynet::nn
