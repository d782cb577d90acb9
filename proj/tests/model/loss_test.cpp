#include <cmath>

#include <gtest/gtest.h>
#include <torch/torch.h>

#include "smokeynet/objective/loss.hpp"

using namespace smokeynet;

namespace {

const double kLn2 = std::log(2.0);

ModelOutputs zeros_outputs(int64_t batch, int stages) {
    const auto opts = torch::TensorOptions().dtype(torch::kFloat64);
    ModelOutputs out;
    out.tile_logits_cnn = torch::zeros({batch, 45}, opts);
    if (stages > 1) out.tile_logits_temporal = torch::zeros({batch, 45}, opts);
    if (stages > 2) out.tile_logits_spatial = torch::zeros({batch, 45}, opts);
    out.image_logit = torch::zeros({batch}, opts);
    return out;
}

LossTargets targets(int64_t batch, std::vector<SupervisionKind> kinds) {
    LossTargets t;
    t.image_labels = torch::zeros({batch}, torch::kFloat64);
    t.tile_labels = torch::zeros({batch, 45}, torch::kFloat64);
    t.tile_labels_present = torch::ones({batch}, torch::kBool);
    t.supervision = std::move(kinds);
    return t;
}

}  // namespace

TEST(TotalLoss, AllHalfFlagship) {
    const auto loss = total_loss(zeros_outputs(1, 3), targets(1, {SupervisionKind::contour}), {});
    EXPECT_NEAR(loss.image_term.item<double>(), kLn2, 1e-12);
    ASSERT_EQ(loss.tile_terms.size(), 3u);
    for (const auto& [name, term] : loss.tile_terms) EXPECT_NEAR(term.item<double>(), 45 * kLn2, 1e-9) << name;
    EXPECT_NEAR(loss.total_value(), 136 * kLn2, 1e-6);
}

TEST(TotalLoss, PerfectPredictionNearZero) {
    auto out = zeros_outputs(2, 3);
    auto t = targets(2, {SupervisionKind::contour, SupervisionKind::contour});
    t.image_labels[1] = 1.0;
    t.tile_labels.index_put_({1, torch::indexing::Slice(0, 9)}, 1.0);
    const auto big = 40.0;
    out.image_logit = (2 * t.image_labels - 1) * big;
    for (auto* s : {&out.tile_logits_cnn, &out.tile_logits_temporal, &out.tile_logits_spatial}) {
        **s = (2 * t.tile_labels - 1) * big;
    }
    const auto loss = total_loss(out, t, {});
    EXPECT_LT(loss.total_value(), 136 * 40 * 1e-7 + 1e-9);
}

TEST(TotalLoss, ExcludedExamplesOnlyTouchImageTerm) {
    const auto loss = total_loss(zeros_outputs(2, 3), targets(2, {SupervisionKind::excluded, SupervisionKind::excluded}), {});
    for (const auto& [name, term] : loss.tile_terms) EXPECT_EQ(term.item<double>(), 0.0);
    EXPECT_DOUBLE_EQ(loss.total_value(), loss.image_term.item<double>());
}

TEST(TotalLoss, MixedExclusionAveragesIncludedOnly) {
    auto out = zeros_outputs(2, 1);
    auto t = targets(2, {SupervisionKind::contour, SupervisionKind::excluded});
    t.tile_labels_present[1] = false;
    // a wild excluded row must not matter
    out.tile_logits_cnn->index_put_({1}, 100.0);
    const auto loss = total_loss(out, t, {});
    EXPECT_NEAR(loss.tile_terms[0].second.item<double>(), 45 * kLn2, 1e-9);
}

TEST(TotalLoss, MissingLabelsIsSupervisionError) {
    auto t = targets(1, {SupervisionKind::box_fill});
    t.tile_labels_present[0] = false;
    EXPECT_THROW(total_loss(zeros_outputs(1, 2), t, {}), SupervisionError);
}

TEST(TotalLoss, StageRemovalIsAdditive) {
    torch::manual_seed(2);
    auto out = zeros_outputs(3, 3);
    *out.tile_logits_cnn = torch::randn({3, 45}, torch::kFloat64);
    *out.tile_logits_temporal = torch::randn({3, 45}, torch::kFloat64);
    *out.tile_logits_spatial = torch::randn({3, 45}, torch::kFloat64);
    out.image_logit = torch::randn({3}, torch::kFloat64);
    auto t = targets(3, {SupervisionKind::contour, SupervisionKind::box_fill, SupervisionKind::contour});
    t.tile_labels = (torch::rand({3, 45}, torch::kFloat64) > 0.8).to(torch::kFloat64);
    t.image_labels = torch::tensor({0.0, 1.0, 1.0}, torch::kFloat64);
    const auto full = total_loss(out, t, {});
    auto without = out;
    without.tile_logits_temporal.reset();
    const auto reduced = total_loss(without, t, {});
    EXPECT_NEAR(full.total_value() - reduced.total_value(), full.tile_terms[1].second.item<double>(), 1e-9);
    double sum = full.image_term.item<double>();
    for (const auto& [n, term] : full.tile_terms) sum += term.item<double>();
    EXPECT_NEAR(full.total_value(), sum, 1e-12);
}

TEST(TotalLoss, WeightsTouchPositivesOnly) {
    auto out = zeros_outputs(1, 1);
    auto t = targets(1, {SupervisionKind::contour});
    t.image_labels[0] = 1.0;
    t.tile_labels[0][0] = 1.0;
    const auto loss = total_loss(out, t, {});
    EXPECT_NEAR(loss.image_term.item<double>(), 5 * kLn2, 1e-12);
    EXPECT_NEAR(loss.tile_terms[0].second.item<double>(), (40 + 44) * kLn2, 1e-9);
    LossWeights normalized;
    normalized.normalize_tiles = true;
    EXPECT_NEAR(total_loss(out, t, normalized).tile_terms[0].second.item<double>(), (40 + 44) * kLn2 / 45, 1e-9);
}

TEST(TotalLoss, ClampedValueLiveGradient) {
    // logit 30 on a negative label: value sits at the clamp, gradient still points down
    auto z = torch::full({1}, 30.0, torch::TensorOptions().dtype(torch::kFloat64).requires_grad(true));
    const auto v = weighted_bce_elementwise(z, torch::zeros({1}, torch::kFloat64), 1.0);
    EXPECT_NEAR(v.item<double>(), -std::log(1e-7), 1e-9);
    v.sum().backward();
    EXPECT_GT(z.grad().item<double>(), 0.5);
}

TEST(TotalLoss, NonPositiveWeightRejected) {
    LossWeights w;
    w.tile_positive = 0;
    EXPECT_THROW(total_loss(zeros_outputs(1, 1), targets(1, {SupervisionKind::contour}), w), ConfigError);
}
