#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>
#include <torch/torch.h>

#include "smokeynet/data/archive.hpp"
#include "smokeynet/data/manifest.hpp"
#include "smokeynet/harness/config.hpp"
#include "smokeynet/harness/dataset.hpp"
#include "smokeynet/harness/fire_grid.hpp"
#include "smokeynet/harness/mirror.hpp"
#include "smokeynet/harness/suite.hpp"
#include "smokeynet/harness/synthetic.hpp"
#include "smokeynet/harness/trainer.hpp"
#include "smokeynet/preprocess/normalize.hpp"

namespace fs = std::filesystem;
using namespace smokeynet;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("smokeynet_harness_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

SyntheticSpec tiny_spec(int fires = 3, int frames = 5, std::uint64_t seed = 7) {
    auto spec = SyntheticSpec::desk(fires, frames, seed);
    spec.split_counts = {fires - 2, 1, 1};
    return spec;
}

// Shared across trainer and suite tests; generated once.
const fs::path& tiny_archive() {
    static const fs::path root = [] {
        const auto p = scratch("tiny_archive");
        generate_synthetic_corpus(tiny_spec(), p);
        return p;
    }();
    return root;
}

RunConfig tiny_config(const fs::path& archive, VariantConfig variant = variants::cnn_only()) {
    RunConfig c;
    c.data.archive = archive;
    c.data.geometry = "desk";
    c.data.augment = false;
    c.model = variant;
    c.model.vit_depth = 1;
    c.train.micro_batch = 1;
    c.train.effective_batch = 2;
    c.train.epochs = 1;
    c.train.threads = 1;
    c.eval.latency_warmup = 0;
    c.eval.latency_trials = 1;
    c.sync_model_geometry();
    return c;
}

struct Splits {
    std::vector<FireSequence> index;
    SplitManifest manifest;
    FrameDataset dataset(Split s, const RunConfig& c) const {
        return FrameDataset::from_split(index, manifest, s, c.data, c.model);
    }
};

Splits load(const fs::path& archive) {
    Splits s;
    s.index = index_archive(archive);
    s.manifest = load_split_manifest(archive / "manifest.txt");
    return s;
}

std::vector<torch::Tensor> snapshot(SmokeyNet& model) {
    std::vector<torch::Tensor> out;
    for (const auto& p : model->parameters()) out.push_back(p.detach().clone());
    return out;
}

double max_abs_diff(const std::vector<torch::Tensor>& a, const std::vector<torch::Tensor>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, (a[i] - b[i]).abs().max().item<double>());
    return worst;
}

}  // namespace

// ---- synthetic corpus ----

TEST(Synthetic, ArchiveRoundTripMatchesGeneratorTruth) {
    const auto root = scratch("roundtrip");
    auto spec = SyntheticSpec::desk(4, 9, 11);
    spec.box_only_fraction = 0.25;
    spec.unannotated_fraction = 0.25;
    spec.split_counts = {2, 1, 1};
    const auto corpus = generate_synthetic_corpus(spec, root);

    const auto index = index_archive(root);
    ASSERT_EQ(index.size(), corpus.fires.size());
    const auto manifest = load_split_manifest(root / "manifest.txt");
    EXPECT_EQ(manifest.train_fires, corpus.manifest.train_fires);
    EXPECT_EQ(manifest.val_fires, corpus.manifest.val_fires);
    EXPECT_EQ(manifest.test_fires, corpus.manifest.test_fires);

    RunConfig c = tiny_config(root);
    c.model = variants::cnn_only();
    c.sync_model_geometry();
    std::size_t frames = 0, checked_tiles = 0;
    for (std::size_t f = 0; f < index.size(); ++f) {
        const auto& truth = corpus.fires[f];
        ASSERT_EQ(index[f].fire_id, truth.fire_id);
        ASSERT_EQ(index[f].frames.size(), truth.frames.size());
        FrameDataset data({index[f]}, c.data, 1, false);
        for (std::size_t i = 0; i < truth.frames.size(); ++i) {
            const auto& got = index[f].frames[i];
            EXPECT_EQ(got.frame_id, truth.frames[i].frame_id);
            EXPECT_EQ(got.offset_seconds, truth.frames[i].offset_seconds);
            EXPECT_EQ(got.offset_seconds, spec.offset_of(static_cast<int>(i)));
            EXPECT_EQ(got.image_label, truth.frames[i].label);
            const auto ex = data.prepare(i, false, 0);
            EXPECT_EQ(ex.supervision, truth.frames[i].supervision) << got.frame_id;
            if (truth.frames[i].tile_labels.empty()) {
                EXPECT_FALSE(ex.tile_labels_present);
                continue;
            }
            ASSERT_TRUE(ex.tile_labels_present);
            const auto bits = ex.tile_labels.to(torch::kUInt8);
            for (std::size_t t = 0; t < truth.frames[i].tile_labels.size(); ++t) {
                EXPECT_EQ(bits[static_cast<int64_t>(t)].item<int>(), truth.frames[i].tile_labels[t])
                    << truth.fire_id << "/" << got.frame_id << " tile " << t;
                ++checked_tiles;
            }
        }
        frames += truth.frames.size();
    }
    EXPECT_EQ(frames, 36u);
    EXPECT_EQ(total_frames(index), corpus.frame_count());
    EXPECT_GT(checked_tiles, 0u);

    // The sidecar written next to the archive carries the same bits.
    const auto sidecar = read_truth_tile_labels(root / "tile_labels.txt");
    for (const auto& fire : corpus.fires) {
        for (const auto& fr : fire.frames) EXPECT_EQ(sidecar.at({fire.fire_id, fr.frame_id}), fr.tile_labels);
    }
}

TEST(Synthetic, FullLengthFiresHaveNoGaps) {
    const auto root = scratch("full_length");
    auto spec = SyntheticSpec::desk(4, 81, 3);
    spec.distractors = 0;
    generate_synthetic_corpus(spec, root);
    const auto index = index_archive(root);
    ASSERT_EQ(index.size(), 4u);
    EXPECT_EQ(total_frames(index), 324u);
    for (const auto& fire : index) {
        EXPECT_EQ(fire.missing_frames, 0);
        EXPECT_EQ(fire.frames.front().offset_seconds, -2400);
        EXPECT_EQ(fire.frames.back().offset_seconds, 2400);
    }
}

TEST(Synthetic, SameSeedSameBytes) {
    const auto a = scratch("det_a"), b = scratch("det_b"), c = scratch("det_c");
    generate_synthetic_corpus(tiny_spec(3, 3, 5), a);
    generate_synthetic_corpus(tiny_spec(3, 3, 5), b);
    generate_synthetic_corpus(tiny_spec(3, 3, 6), c);
    bool any_differs = false;
    for (const auto& entry : fs::recursive_directory_iterator(a)) {
        if (!entry.is_regular_file()) continue;
        const auto rel = fs::relative(entry.path(), a);
        EXPECT_EQ(slurp(entry.path()), slurp(b / rel)) << rel;
        if (entry.path().extension() == ".png" && slurp(entry.path()) != slurp(c / rel)) any_differs = true;
    }
    EXPECT_TRUE(any_differs);
}

TEST(Synthetic, PlumeGrowsAfterIgnition) {
    const auto corpus = generate_synthetic_corpus(tiny_spec(3, 9, 21), scratch("growth"));
    for (const auto& fire : corpus.fires) {
        std::size_t previous = 0;
        for (const auto& f : fire.frames) {
            if (f.offset_seconds < 0) {
                EXPECT_EQ(f.label, Label::negative);
                EXPECT_EQ(f.mask_pixels, 0u);
                continue;
            }
            EXPECT_EQ(f.label, Label::positive);
            EXPECT_GT(f.mask_pixels, 0u);
            EXPECT_GE(f.mask_pixels, previous) << fire.fire_id << " " << f.frame_id;
            previous = f.mask_pixels;
        }
    }
}

TEST(Synthetic, WithoutPlumeNoTileIsPositive) {
    auto spec = tiny_spec(3, 5, 9);
    spec.plume = false;
    const auto corpus = generate_synthetic_corpus(spec, scratch("no_plume"));
    for (const auto& fire : corpus.fires) {
        for (const auto& f : fire.frames) {
            EXPECT_EQ(f.mask_pixels, 0u);
            for (auto bit : f.tile_labels) EXPECT_EQ(bit, 0);
        }
    }
}

TEST(Synthetic, RejectsBadSpecs) {
    auto spec = tiny_spec();
    spec.split_counts = {1, 1};
    EXPECT_THROW(spec.validate(), ConfigError);
    spec = tiny_spec();
    spec.box_only_fraction = 0.7;
    spec.unannotated_fraction = 0.7;
    EXPECT_THROW(spec.validate(), ConfigError);
}

// ---- dataset ----

TEST(Dataset, ExampleShapesAndGroups) {
    const auto s = load(tiny_archive());
    RunConfig c = tiny_config(tiny_archive(), variants::flagship());
    const auto train = s.dataset(Split::train, c);
    ASSERT_EQ(train.size(), 5u);
    const auto ex = train.prepare(3, false, 0);
    EXPECT_EQ(ex.input.sizes(), (std::vector<int64_t>{2, 45, 3, 32, 32}));
    EXPECT_EQ(ex.tile_labels.sizes(), (std::vector<int64_t>{45}));

    EXPECT_EQ(train.group_indices(0, 3, 2), (std::vector<std::size_t>{2, 3}));
    EXPECT_EQ(train.group_indices(0, 0, 3), (std::vector<std::size_t>{0, 0, 0}));
    EXPECT_EQ(train.group_indices(0, 1, 3), (std::vector<std::size_t>{0, 0, 1}));

    // The first frame stands in for its missing predecessor.
    const auto first = train.prepare(0, false, 0);
    EXPECT_TRUE(torch::equal(first.input[0], first.input[1]));

    const Batch batch = collate({train.prepare(1, false, 0), train.prepare(4, false, 0)});
    EXPECT_EQ(batch.input.sizes(), (std::vector<int64_t>{2, 2, 45, 3, 32, 32}));
    EXPECT_EQ(batch.ids.size(), 2u);
    EXPECT_THROW(collate({}), DefinitionError);
}

TEST(Dataset, TileTensorMatchesTiler) {
    const auto s = load(tiny_archive());
    RunConfig c = tiny_config(tiny_archive());
    const auto train = s.dataset(Split::train, c);
    const cv::Mat frame = train.load_frame(0, 2);
    const auto tensor = tiles_to_tensor(normalize(frame), train.geometry().tiles);
    const auto tiled = tile(normalize(frame), train.geometry().tiles);
    ASSERT_EQ(tensor.size(0), static_cast<int64_t>(tiled.tiles.size()));
    for (std::size_t n = 0; n < tiled.tiles.size(); ++n) {
        cv::Mat hwc = tiled.tiles[n].clone();
        auto ref = torch::from_blob(hwc.data, {hwc.rows, hwc.cols, 3}, torch::kFloat32).permute({2, 0, 1});
        ASSERT_TRUE(torch::equal(tensor[static_cast<int64_t>(n)], ref)) << "tile " << n;
    }
    EXPECT_TRUE(torch::equal(train.prepare(2, false, 0).input[0], tensor));
}

TEST(Dataset, BackgroundChannelAddsOnePlane) {
    const auto s = load(tiny_archive());
    RunConfig c = tiny_config(tiny_archive(), variants::background_fusion());
    const auto train = s.dataset(Split::train, c);
    const auto ex = train.prepare(2, false, 0);
    EXPECT_EQ(ex.input.size(2), 4);
    // Identical consecutive frames would give an all-zero plane; the plume moves.
    const auto fg = ex.input.select(2, 3);
    EXPECT_GE(fg.min().item<float>(), 0.0f);
}

// ---- trainer ----

TEST(Trainer, StepArithmetic) {
    EXPECT_EQ(optimizer_steps_per_epoch(100, 2, 32), 4);  // 50 batches / 16
    EXPECT_EQ(optimizer_steps_per_epoch(64, 2, 32), 2);
    EXPECT_EQ(optimizer_steps_per_epoch(65, 2, 32), 3);
    EXPECT_EQ(optimizer_steps_per_epoch(5, 1, 2), 3);
    EXPECT_EQ(optimizer_steps_per_epoch(0, 2, 32), 0);
}

TEST(Trainer, SelectsFirstValidationMinimum) {
    EXPECT_EQ(select_epoch({0.4, 0.2, 0.3, 0.2}), 2);
    EXPECT_EQ(select_epoch({0.1}), 1);
    EXPECT_EQ(select_epoch({0.5, 0.5, 0.5}), 1);
    EXPECT_THROW(select_epoch({}), DefinitionError);
}

TEST(Trainer, ZeroLearningRateLeavesParameters) {
    const auto s = load(tiny_archive());
    RunConfig c = tiny_config(tiny_archive());
    c.train.learning_rate = 0.0;
    c.train.weight_decay = 0.0;
    Trainer trainer(c, scratch("lr0"));
    const auto before = snapshot(trainer.model());
    const auto record = trainer.fit(s.dataset(Split::train, c), s.dataset(Split::val, c));
    EXPECT_EQ(max_abs_diff(before, snapshot(trainer.model())), 0.0);
    EXPECT_EQ(record.optimizer_steps_per_epoch, 3);
    EXPECT_EQ(record.selected_epoch, 1);
    EXPECT_TRUE(fs::exists(record.selected_checkpoint));
}

TEST(Trainer, RunRecordAndCheckpoints) {
    const auto s = load(tiny_archive());
    RunConfig c = tiny_config(tiny_archive());
    c.train.epochs = 2;
    const auto out = scratch("record");
    Trainer trainer(c, out);
    std::vector<int> seen;
    trainer.on_epoch = [&](const EpochRecord& e) { seen.push_back(e.epoch); };
    const auto record = trainer.fit(s.dataset(Split::train, c), s.dataset(Split::val, c));
    EXPECT_EQ(seen, (std::vector<int>{1, 2}));
    ASSERT_EQ(record.epochs.size(), 2u);
    std::vector<double> errors;
    for (const auto& e : record.epochs) {
        EXPECT_TRUE(fs::exists(e.checkpoint));
        EXPECT_TRUE(std::isfinite(e.train_loss));
        errors.push_back(e.val_error);
    }
    EXPECT_EQ(record.selected_epoch, select_epoch(errors));
    EXPECT_TRUE(fs::exists(out / "selected.pt"));
    const auto csv = slurp(out / "run.csv");
    EXPECT_NE(csv.find("selected_epoch," + std::to_string(record.selected_epoch)), std::string::npos);
}

TEST(Trainer, SameSeedSameWeights) {
    const auto s = load(tiny_archive());
    RunConfig c = tiny_config(tiny_archive());
    c.data.augment = true;
    Trainer a(c, scratch("det_a_run")), b(c, scratch("det_b_run"));
    a.fit(s.dataset(Split::train, c), s.dataset(Split::val, c));
    b.fit(s.dataset(Split::train, c), s.dataset(Split::val, c));
    EXPECT_EQ(max_abs_diff(snapshot(a.model()), snapshot(b.model())), 0.0);
}

// LayerNorm-only backbone, so per-example results do not depend on batch
// composition and accumulation must equal the larger micro-batch.
TEST(Trainer, AccumulationMatchesLargerBatch) {
    const auto s = load(tiny_archive());
    RunConfig c = tiny_config(tiny_archive(), variants::cnn_only(Backbone::deit_tiny));
    c.train.learning_rate = 0.01;
    c.train.momentum = 0.9;
    RunConfig whole = c;
    whole.train.micro_batch = 2;
    Trainer accumulated(c, scratch("accum_1x2")), batched(whole, scratch("accum_2x1"));
    const auto before = snapshot(accumulated.model());
    accumulated.fit(s.dataset(Split::train, c), s.dataset(Split::val, c));
    batched.fit(s.dataset(Split::train, whole), s.dataset(Split::val, whole));
    const auto after = snapshot(accumulated.model());
    EXPECT_GT(max_abs_diff(before, after), 1e-4);
    EXPECT_LT(max_abs_diff(after, snapshot(batched.model())), 1e-6);
}

TEST(Trainer, NonFiniteLossRaisesDivergence) {
    const auto s = load(tiny_archive());
    RunConfig c = tiny_config(tiny_archive());
    c.train.learning_rate = 1e12;
    c.train.epochs = 4;
    Trainer trainer(c, scratch("diverge"));
    EXPECT_THROW(trainer.fit(s.dataset(Split::train, c), s.dataset(Split::val, c)), DivergenceError);
}

TEST(Trainer, RefusesSplitWithoutTileSupervision) {
    const auto root = scratch("unannotated");
    auto spec = tiny_spec(3, 3, 4);
    spec.unannotated_fraction = 1.0;
    generate_synthetic_corpus(spec, root);
    const auto s = load(root);
    RunConfig c = tiny_config(root);
    const auto train = s.dataset(Split::train, c);
    // Negative frames are still supervised (empty mask); drop them.
    std::vector<FireSequence> fires = train.fires();
    for (auto& fire : fires) {
        std::erase_if(fire.frames, [](const FrameRecord& f) { return !is_positive(f.image_label); });
    }
    FrameDataset positives(fires, c.data, 1, false);
    EXPECT_FALSE(positives.has_tile_supervision());
    Trainer trainer(c, scratch("unannotated_run"));
    EXPECT_THROW(trainer.fit(positives, s.dataset(Split::val, c)), ConfigError);
}

TEST(Trainer, EmptyValidationRejected) {
    const auto s = load(tiny_archive());
    RunConfig c = tiny_config(tiny_archive());
    Trainer trainer(c, scratch("noval"));
    EXPECT_THROW(trainer.fit(s.dataset(Split::train, c), s.dataset(Split::omit, c)), ConfigError);
}

// ---- config ----

TEST(Config, TextRoundTrip) {
    RunConfig c;
    c.data.geometry = "desk";
    c.train.learning_rate = 0.01;
    c.train.seed = 42;
    c.model = variants::with_backbone(Backbone::mobilenet_fpn);
    const auto text = to_config_text(c);
    EXPECT_EQ(to_config_text(parse_config(text)), text);
    EXPECT_EQ(config_keys().size(), static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')));
}

TEST(Config, ParsesCommentsAndOverrides) {
    const auto c = parse_config("# header\n\ntrain.epochs = 3  # short\nmodel.backbone = mobilenet\n");
    EXPECT_EQ(c.train.epochs, 3);
    EXPECT_EQ(c.model.backbone, Backbone::mobilenet_v3_large);
    EXPECT_EQ(c.train.micro_batch, 2);
}

TEST(Config, UnknownKeyNamesLine) {
    try {
        parse_config("train.epochs = 3\ntrain.epoch = 4\n", {}, "run.cfg");
        FAIL() << "no throw";
    } catch (const ConfigError& e) {
        const std::string what = e.what();
        EXPECT_NE(what.find("run.cfg:2"), std::string::npos) << what;
        EXPECT_NE(what.find("train.epoch"), std::string::npos) << what;
    }
    EXPECT_THROW(parse_config("train.epochs = many\n"), ConfigError);
    EXPECT_THROW(parse_config("no equals sign\n"), ConfigError);
}

TEST(Config, ValidationCatchesInconsistentBatches) {
    RunConfig c;
    c.train.micro_batch = 4;
    c.train.effective_batch = 6;
    EXPECT_THROW(c.validate(), ConfigError);
    c.train.effective_batch = 8;
    EXPECT_NO_THROW(c.validate());
    c.train.grad_clip_norm = -1;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, SweepGrids) {
    const auto g = sweep::grids();
    EXPECT_EQ(g.at("train.learning_rate").size(), 3u);
    EXPECT_EQ(g.at("data.tile_threshold").size(), 4u);
    for (const auto& [key, values] : g) {
        for (const auto& v : values) EXPECT_NO_THROW(parse_config(key + " = " + v + "\n")) << key << "=" << v;
    }
}

// ---- suite ----

TEST(Suite, EmptySuiteWritesHeaderOnly) {
    const auto out = scratch("suite_empty");
    const auto runs = run_suite({}, tiny_config(tiny_archive()), out);
    EXPECT_TRUE(runs.empty());
    EXPECT_EQ(slurp(out / "metrics.csv"), std::string(kMetricsTableHeader) + "\n");
}

TEST(Suite, RepeatedEntriesGetDistinctSeedsAndFailuresAreIsolated) {
    auto entries = suite_from_presets("cnn_only,cnn_only");
    auto broken = variants::cnn_vit();
    broken.image_head = ImageHeadMode::tile_fc;
    entries.insert(entries.begin() + 1, SuiteEntry{"broken", broken});
    RunConfig base = tiny_config(tiny_archive());
    base.train.seed = 10;
    const auto out = scratch("suite_dupes");
    const auto runs = run_suite(entries, base, out);
    ASSERT_EQ(runs.size(), 3u);
    EXPECT_TRUE(runs[0].ok);
    EXPECT_FALSE(runs[1].ok);
    EXPECT_NE(runs[1].error.find("image_head"), std::string::npos) << runs[1].error;
    EXPECT_TRUE(runs[2].ok);
    EXPECT_EQ(runs[0].seed, 10u);
    EXPECT_EQ(runs[2].seed, 12u);
    const auto csv = slurp(out / "suite_runs.csv");
    EXPECT_NE(csv.find("failed"), std::string::npos);
    EXPECT_NE(slurp(out / "metrics.csv").find("\"broken\",FAILED"), std::string::npos);
}

TEST(Suite, ThreeVariantTableIsComplete) {
    const auto out = scratch("suite_three");
    const auto runs = run_suite(suite_from_presets("flagship,cnn_only,cnn_vit"), tiny_config(tiny_archive()), out);
    ASSERT_EQ(runs.size(), 3u);
    std::ifstream in(out / "metrics.csv");
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, std::string(kMetricsTableHeader));
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        // model + params, latency, accuracy, F1, precision, recall, TTD all, TTD detected, undetected
        const auto close = line.find("\",");
        ASSERT_NE(close, std::string::npos);
        std::stringstream rest(line.substr(close + 2));
        std::string cell;
        int cells = 0;
        while (std::getline(rest, cell, ',')) {
            EXPECT_FALSE(cell.empty()) << line;
            EXPECT_NE(cell, "FAILED") << line;
            ++cells;
        }
        EXPECT_EQ(cells, 9) << line;
    }
    EXPECT_EQ(rows, 3);
    for (const auto& r : runs) {
        EXPECT_GT(r.report.params_millions, 0.0);
        EXPECT_GT(r.report.latency_ms_per_image, 0.0);
    }
    EXPECT_TRUE(fs::exists(out / "ttd_detail.csv"));
}

// ---- fire grid ----

TEST(FireGrid, ColoursCellsByOutcome) {
    FirePredictions fire{"f", {}};
    for (int t = -2400; t <= 2400; t += 60) {
        if (t == -60 || t == 0 || t == 1200) continue;  // three missing slots
        const bool positive = t >= 0;
        fire.frames.push_back({t, positive ? Label::positive : Label::negative, positive});
    }
    const auto grid = build_fire_grid({fire});
    ASSERT_EQ(grid.offsets.size(), 81u);
    const auto img = render_fire_grid(grid, 4);
    int white = 0, green = 0;
    for (int c = 0; c < 81; ++c) {
        const auto px = img.at<cv::Vec3b>(1 + 2, c * 5 + 1 + 2);
        if (px == cv::Vec3b(255, 255, 255)) ++white;
        if (px == cv::Vec3b(60, 170, 60)) ++green;
    }
    EXPECT_EQ(white, 3);
    EXPECT_EQ(green, 78);

    fire.frames.front().predicted_positive = true;
    const auto wrong = build_fire_grid({fire});
    EXPECT_EQ(wrong.cells[0][0], CellState::incorrect);
}

// ---- mirror ----

class MirrorServer : public ::testing::Test {
protected:
    void SetUp() override {
        for (int i = 0; i < 5000; ++i) payload_ += static_cast<char>((i * 31 + 7) % 251);
        server_.Get(R"(/figlib/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
            ++hits_;
            if (req.matches[1] == "missing.jpg") {
                res.status = 404;
                return;
            }
            res.set_content(payload_, "application/octet-stream");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    void TearDown() override {
        server_.stop();
        thread_.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/figlib"; }

    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::string payload_;
    int hits_ = 0;
};

TEST_F(MirrorServer, DownloadsResumesAndSkips) {
    const auto dest = scratch("mirror");
    fs::create_directories(dest / "b");
    std::ofstream(dest / "b" / "two.jpg.part", std::ios::binary) << payload_.substr(0, 1234);

    MirrorOptions opt{url(), parse_listing("# listing\na/one.jpg\n\nb/two.jpg  \n"), dest, 0};
    const auto first = mirror_files(opt);
    EXPECT_EQ(first.downloaded, 2u);
    EXPECT_EQ(first.resumed, 1u);
    EXPECT_EQ(first.bytes, payload_.size() * 2 - 1234);
    EXPECT_EQ(slurp(dest / "a" / "one.jpg"), payload_);
    EXPECT_EQ(slurp(dest / "b" / "two.jpg"), payload_);
    EXPECT_FALSE(fs::exists(dest / "b" / "two.jpg.part"));

    const int hits = hits_;
    const auto again = mirror_files(opt);
    EXPECT_EQ(again.skipped, 2u);
    EXPECT_EQ(hits_, hits);

    std::stringstream log(slurp(dest / "checksums.log"));
    std::string crc, size, path;
    log >> crc >> size >> path;
    EXPECT_EQ(std::stoul(crc, nullptr, 16), file_crc32(dest / "a" / "one.jpg"));
    EXPECT_EQ(size, std::to_string(payload_.size()));
    EXPECT_EQ(path, "a/one.jpg");
}

TEST_F(MirrorServer, ErrorsAreReported) {
    const auto dest = scratch("mirror_err");
    try {
        mirror_files({url(), {"missing.jpg"}, dest, 1});
        FAIL() << "no throw";
    } catch (const IngestError& e) {
        EXPECT_NE(std::string(e.what()).find("HTTP 404"), std::string::npos) << e.what();
    }
    EXPECT_EQ(hits_, 2);
    EXPECT_THROW(mirror_files({url(), {"../escape.jpg"}, dest, 0}), ConfigError);
    EXPECT_THROW(mirror_files({"no-scheme", {"a.jpg"}, dest, 0}), ConfigError);
}
