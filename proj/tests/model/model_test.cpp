#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>
#include <torch/torch.h>

#include "smokeynet/model/checkpoint.hpp"
#include "smokeynet/model/smokeynet.hpp"
#include "smokeynet/objective/loss.hpp"

using namespace smokeynet;

namespace {

// Small tiles keep every variant fast on one core.
VariantConfig small(VariantConfig v, int tile = 32) {
    v.tile_size = tile;
    v.vit_depth = 2;
    return v;
}

torch::Tensor random_input(const VariantConfig& v, int64_t batch, std::uint64_t seed = 0) {
    torch::manual_seed(seed);
    return torch::randn({batch, v.num_frames, v.num_tiles(), v.input_channels(), v.tile_size, v.tile_size});
}

int64_t closed_form_head(int64_t in) { return in * 256 + 256 + 256 * 64 + 64 + 64 + 1; }

}  // namespace

TEST(Heads, ParameterCountOfLoneHead) {
    nn::MlpHead head(512);
    EXPECT_EQ(count_parameters(*head), 147841);
    EXPECT_EQ(closed_form_head(512), 147841);
}

TEST(Heads, CountIsAdditive) {
    nn::MlpHead a(512), b(960);
    torch::nn::Module both;
    both.register_module("a", a);
    both.register_module("b", b);
    EXPECT_EQ(count_parameters(both), count_parameters(*a) + count_parameters(*b));
    EXPECT_EQ(count_parameters(*b), closed_form_head(960));
}

TEST(Heads, MillionsRounding) {
    EXPECT_DOUBLE_EQ(parameters_millions(56'949'999), 56.9);
    EXPECT_DOUBLE_EQ(parameters_millions(147'841), 0.1);
}

TEST(ImageDecision, AnyTile) {
    auto all_negative = -torch::rand({2, 45}) - 0.01;
    EXPECT_TRUE((image_decision_from_tiles(all_negative, ImageHeadMode::any_tile) <= 0).all().item<bool>());
    auto one = all_negative.clone();
    one.index_put_({1, 17}, 0.25);
    const auto logit = image_decision_from_tiles(one, ImageHeadMode::any_tile);
    EXPECT_LE(logit[0].item<float>(), 0.0f);
    EXPECT_GT(logit[1].item<float>(), 0.0f);
}

TEST(ImageDecision, TileFcZeroWeights) {
    nn::TileFcHead fc(45);
    torch::NoGradGuard guard;
    fc->linear()->weight.zero_();
    fc->linear()->bias.fill_(-0.7);
    for (int s = 0; s < 3; ++s) {
        const auto p = torch::sigmoid(image_decision_from_tiles(torch::randn({4, 45}) * 5, ImageHeadMode::tile_fc, &fc));
        EXPECT_TRUE(torch::allclose(p, torch::full({4}, 1.0 / (1.0 + std::exp(0.7)))));
    }
}

TEST(ImageDecision, ThresholdDuality) {
    const auto z = torch::linspace(-30, 30, 6001, torch::kFloat64);
    EXPECT_TRUE(torch::equal(torch::sigmoid(z) > 0.5, z > 0));
}

TEST(Variants, InvariantViolationsNameFields) {
    auto expect_error = [](VariantConfig v, const std::string& field) {
        try {
            v.validate();
            FAIL() << "accepted " << v.describe();
        } catch (const ConfigError& e) {
            EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
        }
    };
    auto v = variants::flagship();
    v.image_head = ImageHeadMode::tile_fc;
    expect_error(v, "image_head");
    v = variants::cnn_lstm();
    v.image_head = ImageHeadMode::cls_token;
    expect_error(v, "image_head");
    v = variants::cnn3d();
    v.spatial = SpatialAggregator::vit;
    v.image_head = ImageHeadMode::cls_token;
    expect_error(v, "cnn3d");
    v = variants::flagship();
    v.num_frames = 1;
    expect_error(v, "num_frames");
    EXPECT_THROW(build_model(v), ConfigError);
}

TEST(Variants, PresetsValidate) {
    for (const auto& name : variants::preset_names()) EXPECT_NO_THROW(variants::preset(name).validate()) << name;
    EXPECT_THROW(variants::preset("nope"), ConfigError);
}

class VariantShapes : public ::testing::TestWithParam<std::string> {};

TEST_P(VariantShapes, StageCorrectLogits) {
    const auto v = small(variants::preset(GetParam()));
    auto model = build_model(v);
    model->eval();
    torch::NoGradGuard guard;
    const auto out = model->forward(random_input(v, 2));
    const auto stages = out.stages();
    ASSERT_EQ(static_cast<int>(stages.size()), v.stage_count());
    for (const auto& [name, logits] : stages) {
        EXPECT_EQ(logits.sizes(), (std::vector<int64_t>{2, 45})) << name;
    }
    EXPECT_EQ(out.image_logit.sizes(), (std::vector<int64_t>{2}));
    EXPECT_TRUE(torch::isfinite(out.image_logit).all().item<bool>());
}

INSTANTIATE_TEST_SUITE_P(AllPresets, VariantShapes, ::testing::ValuesIn(variants::preset_names()));

TEST(Forward, SingleFrameBaseline) {
    const auto v = small(variants::cnn_only());
    auto model = build_model(v);
    model->eval();
    torch::NoGradGuard guard;
    const auto out = model->forward(random_input(v, 1));
    ASSERT_EQ(out.stages().size(), 1u);
    EXPECT_EQ(out.tile_logits_cnn->sizes(), (std::vector<int64_t>{1, 45}));
    EXPECT_EQ(out.image_logit.sizes(), (std::vector<int64_t>{1}));
}

TEST(Forward, EvalDeterministic) {
    const auto v = small(variants::flagship());
    auto model = build_model(v);
    model->eval();
    torch::NoGradGuard guard;
    const auto x = random_input(v, 2);
    const auto a = model->forward(x);
    const auto b = model->forward(x);
    EXPECT_TRUE(torch::equal(a.image_logit, b.image_logit));
    EXPECT_TRUE(torch::equal(*a.tile_logits_spatial, *b.tile_logits_spatial));
}

TEST(Forward, EvalChunkingDoesNotChangeOutput) {
    const auto v = small(variants::cnn_lstm());
    auto model = build_model(v);
    model->eval();
    torch::NoGradGuard guard;
    const auto x = random_input(v, 2);
    const auto a = model->forward(x).image_logit;
    model->set_eval_chunk(7);
    const auto b = model->forward(x).image_logit;
    EXPECT_TRUE(torch::allclose(a, b, 1e-5, 1e-6));
}

TEST(Forward, ShapeErrors) {
    const auto v = small(variants::flagship());
    auto model = build_model(v);
    model->eval();
    torch::NoGradGuard guard;
    EXPECT_THROW(model->forward(torch::zeros({1, 2, 44, 3, 32, 32})), ShapeError);
    EXPECT_THROW(model->forward(torch::zeros({1, 2, 45, 3, 30, 30})), ShapeError);
    EXPECT_THROW(model->forward(torch::zeros({1, 3, 45, 3, 32, 32})), ShapeError);
    EXPECT_THROW(model->forward(torch::zeros({1, 2, 45, 4, 32, 32})), ShapeError);
}

TEST(Forward, BackboneIndependence) {
    const auto v = small(variants::flagship());
    auto model = build_model(v);
    model->eval();
    torch::NoGradGuard guard;
    auto x = random_input(v, 1, 3);
    const auto full = model->encode_tiles(x);
    auto isolated = torch::zeros_like(x);
    isolated.select(2, 13).copy_(x.select(2, 13));
    const auto alone = model->encode_tiles(isolated);
    EXPECT_TRUE(torch::allclose(full.select(2, 13), alone.select(2, 13), 1e-5, 1e-6));
}

namespace {

torch::Tensor permuted_logit(SmokeyNet& model, const torch::Tensor& x, const torch::Tensor& perm) {
    return model->forward(x.index_select(2, perm)).image_logit;
}

}  // namespace

TEST(Forward, PermutationSensitivity) {
    auto v = small(variants::cnn_vit());
    torch::manual_seed(5);
    auto with_pos = build_model(v);
    v.positional_embedding = false;
    auto without_pos = build_model(v);
    with_pos->eval();
    without_pos->eval();
    torch::NoGradGuard guard;
    const auto x = random_input(v, 2, 9);
    // learned positions start near zero; make them matter
    for (auto& item : with_pos->named_parameters()) {
        if (item.key() == "vit.pos_embed") item.value().normal_(0, 1);
    }
    const auto id = torch::arange(45);
    const auto perm = torch::randperm(45);
    EXPECT_FALSE(torch::allclose(with_pos->forward(x).image_logit, permuted_logit(with_pos, x, perm), 1e-4, 1e-5));
    EXPECT_TRUE(torch::allclose(without_pos->forward(x).image_logit, permuted_logit(without_pos, x, perm), 1e-4, 1e-5));
    EXPECT_TRUE(torch::equal(permuted_logit(with_pos, x, id), with_pos->forward(x).image_logit));
}

class GradientFlow : public ::testing::TestWithParam<std::string> {};

TEST_P(GradientFlow, EveryStageReceivesGradient) {
    const auto v = small(variants::preset(GetParam()));
    torch::manual_seed(1);
    auto model = build_model(v);
    model->train();
    const auto x = random_input(v, 2, 4);
    const auto out = model->forward(x);
    LossTargets t;
    t.image_labels = torch::tensor({0.0f, 1.0f});
    t.tile_labels = torch::zeros({2, 45});
    t.tile_labels.index_put_({1, torch::indexing::Slice(0, 5)}, 1.0);
    t.tile_labels_present = torch::tensor({true, true});
    t.supervision = {SupervisionKind::contour, SupervisionKind::contour};
    total_loss(out, t, {}).total.backward();

    const auto params = model->named_parameters();
    for (const auto& item : params) {
        ASSERT_TRUE(item.value().grad().defined()) << item.key();
        EXPECT_TRUE(torch::isfinite(item.value().grad()).all().item<bool>()) << item.key();
    }
    for (const auto& [stage, modules] : model->stage_modules()) {
        if (stage == "image" && v.image_head == ImageHeadMode::any_tile) continue;
        bool nonzero = false;
        for (const auto& item : params) {
            for (const auto& m : modules) {
                if (item.key().rfind(m + ".", 0) == 0 && item.value().grad().abs().sum().item<double>() > 0) {
                    nonzero = true;
                }
            }
        }
        EXPECT_TRUE(nonzero) << stage;
    }
}

INSTANTIATE_TEST_SUITE_P(AllPresets, GradientFlow, ::testing::ValuesIn(variants::preset_names()));

TEST(Fpn, Widths) {
    nn::MobileNetFpn fpn(3, 224);
    EXPECT_EQ(fpn.level_widths(), (std::vector<int64_t>{784, 784, 784}));
    EXPECT_EQ(fpn.concat_width(), 2352);
    EXPECT_EQ(fpn.width(), 960);
    fpn.eval();
    torch::NoGradGuard guard;
    const auto x = torch::randn({1, 3, 224, 224});
    const auto maps = fpn.pyramid(x);
    ASSERT_EQ(maps.size(), 3u);
    EXPECT_EQ(maps[0].sizes(), (std::vector<int64_t>{1, 256, 7, 7}));
    EXPECT_EQ(maps[1].sizes(), (std::vector<int64_t>{1, 256, 7, 7}));
    EXPECT_EQ(maps[2].sizes(), (std::vector<int64_t>{1, 256, 4, 4}));
    EXPECT_EQ(fpn.forward(x).sizes(), (std::vector<int64_t>{1, 960}));
}

TEST(Fusion, HalvesWidth) {
    nn::BackgroundFusion fusion(960);
    EXPECT_EQ(fusion->linear()->weight.sizes(), (std::vector<int64_t>{960, 1920}));
    const auto out = fusion->forward(torch::randn({2, 45, 960}), torch::randn({2, 45, 960}));
    EXPECT_EQ(out.sizes(), (std::vector<int64_t>{2, 45, 960}));
    EXPECT_THROW(fusion->forward(torch::randn({2, 45, 960}), torch::randn({2, 45, 512})), ShapeError);
}

TEST(Fusion, IdentityAndZero) {
    const int64_t e = 16;
    nn::BackgroundFusion fusion(e);
    torch::NoGradGuard guard;
    const auto raw = torch::randn({3, 45, e});
    const auto bg = torch::randn({3, 45, e});
    fusion->linear()->weight.zero_();
    fusion->linear()->bias.zero_();
    EXPECT_EQ(fusion->forward(raw, torch::zeros_like(bg)).abs().max().item<float>(), 0.0f);
    fusion->linear()->weight.narrow(1, 0, e).copy_(torch::eye(e));
    EXPECT_TRUE(torch::allclose(fusion->forward(raw, bg), raw));
}

TEST(Checkpoint, RoundTrip) {
    const auto dir = std::filesystem::temp_directory_path() / "smokeynet_ckpt";
    std::filesystem::create_directories(dir);
    const auto v = small(variants::background_fusion());
    auto model = build_model(v);
    model->eval();
    save_checkpoint(dir / "m.pt", model, 7, 0.125);
    const auto meta = read_checkpoint_meta(dir / "m.pt");
    EXPECT_EQ(meta.epoch, 7);
    EXPECT_DOUBLE_EQ(meta.val_error, 0.125);
    EXPECT_EQ(meta.format_version, kCheckpointFormatVersion);
    EXPECT_EQ(meta.variant.describe(), v.describe());
    EXPECT_EQ(meta.variant.tile_size, 32);

    auto [loaded, meta2] = load_checkpoint(dir / "m.pt");
    loaded->eval();
    torch::NoGradGuard guard;
    const auto x = random_input(v, 1, 2);
    EXPECT_TRUE(torch::equal(model->forward(x).image_logit, loaded->forward(x).image_logit));

    auto other = build_model(small(variants::flagship()));
    EXPECT_THROW(load_checkpoint_into(dir / "m.pt", other), ConfigError);
}
