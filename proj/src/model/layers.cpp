#include "smokeynet/model/layers.hpp"

namespace smokeynet::nn {

namespace {

torch::Tensor activate(const torch::Tensor& x, Activation activation) {
    switch (activation) {
        case Activation::relu: return torch::relu(x);
        case Activation::hardswish: return torch::hardswish(x);
        case Activation::silu: return torch::silu(x);
        case Activation::none: break;
    }
    return x;
}

}  // namespace

Seq conv_bn_act(int64_t in, int64_t out, int64_t kernel, int64_t stride, int64_t groups,
                                  Activation activation, double bn_eps, double bn_momentum) {
    Seq seq;
    seq->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, kernel)
                                         .stride(stride)
                                         .padding((kernel - 1) / 2)
                                         .groups(groups)
                                         .bias(false)));
    seq->push_back(torch::nn::BatchNorm2d(torch::nn::BatchNorm2dOptions(out).eps(bn_eps).momentum(bn_momentum)));
    if (activation != Activation::none) {
        seq->push_back(torch::nn::Functional([activation](const torch::Tensor& x) { return activate(x, activation); }));
    }
    return seq;
}

SqueezeExcitationImpl::SqueezeExcitationImpl(int64_t channels, int64_t squeeze, Activation activation, bool hard_gate)
    : activation_(activation), hard_gate_(hard_gate) {
    fc1_ = register_module("fc1", torch::nn::Conv2d(torch::nn::Conv2dOptions(channels, squeeze, 1)));
    fc2_ = register_module("fc2", torch::nn::Conv2d(torch::nn::Conv2dOptions(squeeze, channels, 1)));
}

torch::Tensor SqueezeExcitationImpl::forward(const torch::Tensor& x) {
    auto scale = torch::adaptive_avg_pool2d(x, {1, 1});
    scale = fc2_(activate(fc1_(scale), activation_));
    scale = hard_gate_ ? torch::hardsigmoid(scale) : torch::sigmoid(scale);
    return x * scale;
}

SelfAttentionImpl::SelfAttentionImpl(int64_t width, int64_t heads, double dropout) : heads_(heads), dropout_(dropout) {
    TORCH_CHECK(width % heads == 0, "attention width ", width, " is not divisible by ", heads, " heads");
    qkv_ = register_module("qkv", torch::nn::Linear(width, 3 * width));
    proj_ = register_module("proj", torch::nn::Linear(width, width));
}

torch::Tensor SelfAttentionImpl::forward(const torch::Tensor& x) {
    const auto batch = x.size(0);
    const auto tokens = x.size(1);
    const auto width = x.size(2);
    auto qkv = qkv_(x).view({batch, tokens, 3, heads_, width / heads_}).permute({2, 0, 3, 1, 4});
    auto attended = at::scaled_dot_product_attention(qkv[0], qkv[1], qkv[2], std::nullopt,
                                                     is_training() ? dropout_ : 0.0);
    return proj_(attended.transpose(1, 2).reshape({batch, tokens, width}));
}

TransformerBlockImpl::TransformerBlockImpl(int64_t width, int64_t heads, int64_t mlp_ratio, double dropout,
                                           double ln_eps) {
    norm1_ = register_module("norm1", torch::nn::LayerNorm(torch::nn::LayerNormOptions({width}).eps(ln_eps)));
    attn_ = register_module("attn", SelfAttention(width, heads, dropout));
    norm2_ = register_module("norm2", torch::nn::LayerNorm(torch::nn::LayerNormOptions({width}).eps(ln_eps)));
    fc1_ = register_module("fc1", torch::nn::Linear(width, width * mlp_ratio));
    fc2_ = register_module("fc2", torch::nn::Linear(width * mlp_ratio, width));
    drop_ = register_module("drop", torch::nn::Dropout(dropout));
}

torch::Tensor TransformerBlockImpl::forward(const torch::Tensor& x) {
    auto y = x + drop_(attn_(norm1_(x)));
    return y + drop_(fc2_(drop_(torch::gelu(fc1_(norm2_(y))))));
}

MlpHeadImpl::MlpHeadImpl(int64_t in_width, double dropout) : in_width_(in_width) {
    layers_ = torch::nn::Sequential(torch::nn::Linear(in_width, kHeadHidden1), torch::nn::ReLU(),
                                    torch::nn::Dropout(dropout), torch::nn::Linear(kHeadHidden1, kHeadHidden2),
                                    torch::nn::ReLU(), torch::nn::Dropout(dropout),
                                    torch::nn::Linear(kHeadHidden2, 1));
    register_module("layers", layers_);
}

torch::Tensor MlpHeadImpl::forward(const torch::Tensor& x) { return layers_->forward(x).squeeze(-1); }

}  // namespace smokeynet::nn
