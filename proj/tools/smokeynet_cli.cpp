// smokeynet: prepare / synth / train / eval / suite / report.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "smokeynet/common/log.hpp"
#include "smokeynet/data/archive.hpp"
#include "smokeynet/data/manifest.hpp"
#include "smokeynet/harness/config.hpp"
#include "smokeynet/harness/dataset.hpp"
#include "smokeynet/harness/fire_grid.hpp"
#include "smokeynet/harness/mirror.hpp"
#include "smokeynet/harness/suite.hpp"
#include "smokeynet/harness/synthetic.hpp"
#include "smokeynet/harness/trainer.hpp"
#include "smokeynet/model/checkpoint.hpp"
#include "smokeynet/objective/report.hpp"

namespace fs = std::filesystem;
using namespace smokeynet;

namespace {

struct CommonFlags {
    std::string config;
    std::string variant;
    int frames = 0;
    std::string backbone;
    std::int64_t seed = -1;
    std::string out = "runs";
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config, "Config file (flat key = value)");
    cmd->add_option("--variant", f.variant, "Variant preset")
        ->check(CLI::IsMember(variants::preset_names()));
    cmd->add_option("--frames", f.frames, "Frames per example")->check(CLI::Range(1, 3));
    cmd->add_option("--backbone", f.backbone, "Backbone override");
    cmd->add_option("--seed", f.seed, "Root seed");
    cmd->add_option("--out", f.out, "Output directory");
    cmd->add_option("--set", f.overrides, "Extra key=value settings (repeatable)");
}

RunConfig resolve(const CommonFlags& f) {
    RunConfig config;
    if (!f.config.empty()) config = load_config(f.config);
    if (!f.variant.empty()) {
        const auto keep_dropout = config.model.dropout;
        const auto weights = config.model.pretrained_weights;
        const auto pretrained = config.model.pretrained_backbone;
        config.model = variants::preset(f.variant);
        config.model.dropout = keep_dropout;
        config.model.pretrained_weights = weights;
        config.model.pretrained_backbone = pretrained;
    }
    if (f.frames > 0) config.model.num_frames = f.frames;
    if (!f.backbone.empty()) config.model.backbone = parse_backbone(f.backbone);
    if (f.seed >= 0) config.train.seed = static_cast<std::uint64_t>(f.seed);
    for (const auto& kv : f.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        apply_setting(config, kv.substr(0, eq), kv.substr(eq + 1));
    }
    config.sync_model_geometry();
    config.validate();
    return config;
}

Split parse_split(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    throw ConfigError("unknown split '" + s + "'");
}

void write_predictions(const fs::path& path, const std::string& model, const EvaluationResult& eval) {
    std::ofstream out(path);
    out << "model,fire_id,frame_id,offset_seconds,label,predicted,image_logit\n";
    for (const auto& f : eval.frames) {
        out << '"' << model << "\"," << f.fire_id << ',' << f.frame_id << ',' << f.offset_seconds << ','
            << int(to_bit(f.label)) << ',' << int(f.predicted_positive) << ',' << f.image_logit << '\n';
    }
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (char c : line) {
        if (c == '"') {
            quoted = !quoted;
        } else if (c == ',' && !quoted) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

int cmd_prepare(const std::string& archive, const std::string& manifest, const std::string& url,
                const std::string& listing) {
    if (!url.empty()) {
        std::ifstream in(listing);
        if (!in) throw ConfigError("--url needs --listing with one relative path per line");
        std::stringstream text;
        text << in.rdbuf();
        MirrorOptions opts{url, parse_listing(text.str()), archive};
        const auto r = mirror_files(opts);
        std::cout << "mirror: " << r.downloaded << " downloaded (" << r.resumed << " resumed), " << r.skipped
                  << " already present\n";
    }
    const auto index = index_archive(archive);
    std::size_t missing = 0, skipped = 0;
    for (const auto& f : index) missing += f.missing_frames, skipped += f.skipped_files;
    std::cout << "fires: " << index.size() << "  images: " << total_frames(index) << "  missing slots: " << missing
              << "  skipped files: " << skipped << "\n";
    const fs::path manifest_path = manifest.empty() ? fs::path(archive) / "manifest.txt" : fs::path(manifest);
    if (fs::exists(manifest_path)) {
        const auto [m, report] = load_split_manifest(manifest_path, index);
        for (auto split : kAllSplits) {
            const auto& c = report.counts.at(split);
            std::cout << to_string(split) << ": " << c.fires << " fires / " << c.images << " images\n";
        }
    } else {
        std::cout << "no manifest at " << manifest_path << "\n";
    }
    return 0;
}

int cmd_train(const CommonFlags& flags) {
    const RunConfig config = resolve(flags);
    const auto index = index_archive(config.data.archive);
    const auto manifest = load_split_manifest(config.data.manifest_path(), index).first;
    const auto train = FrameDataset::from_split(index, manifest, Split::train, config.data, config.model);
    const auto val = FrameDataset::from_split(index, manifest, Split::val, config.data, config.model);
    fs::create_directories(flags.out);
    std::ofstream(fs::path(flags.out) / "config.txt") << to_config_text(config);
    Trainer trainer(config, flags.out);
    const auto record = trainer.fit(train, val);
    std::cout << config.model.describe() << ": selected epoch " << record.selected_epoch << " (val error "
              << record.epochs[record.selected_epoch - 1].val_error << "), checkpoint "
              << record.selected_checkpoint.string() << "\n";
    return 0;
}

int cmd_eval(const CommonFlags& flags, const std::string& checkpoint) {
    RunConfig config = resolve(flags);
    auto [model, meta] = load_checkpoint(checkpoint);
    config.model = meta.variant;
    model->set_eval_chunk(config.eval.eval_chunk);
    model->to(compute_device());
    const auto index = index_archive(config.data.archive);
    const auto manifest = load_split_manifest(config.data.manifest_path(), index).first;
    const auto data = FrameDataset::from_split(index, manifest, parse_split(config.eval.split), config.data, meta.variant);
    const auto eval = evaluate(model, data, config.train.micro_batch);
    const double latency = measure_model_latency(model, data, config.eval.latency_warmup, config.eval.latency_trials);
    const std::string name = meta.variant.describe();
    const auto report = make_report(name, model, eval, latency);

    const fs::path out(flags.out);
    fs::create_directories(out);
    write_metrics_table(out / "metrics.csv", {report});
    std::ofstream ttd(out / "ttd_detail.csv");
    write_ttd_detail(ttd, name, report.ttd);
    write_predictions(out / "predictions.csv", name, eval);
    std::ofstream(out / "model_info.txt") << name << '\n' << report.params_millions << '\n' << latency << '\n';
    write_fire_grid(build_fire_grid(eval.fires), out / "fire_grid.png", out / "fire_grid.csv");
    write_metrics_table(std::cout, {report});
    return 0;
}

int cmd_suite(const CommonFlags& flags, const std::string& list) {
    const RunConfig config = resolve(flags);
    const auto runs = run_suite(suite_from_presets(list), config, flags.out);
    std::vector<MetricsReport> rows;
    for (const auto& r : runs) rows.push_back(r.report);
    write_metrics_table(std::cout, rows);
    return 0;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& out_dir) {
    std::vector<MetricsReport> rows;
    const fs::path out(out_dir);
    fs::create_directories(out);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const fs::path dir(inputs[i]);
        std::ifstream in(dir / "predictions.csv");
        if (!in) throw IngestError("no predictions.csv in " + dir.string());
        std::string line;
        std::getline(in, line);
        std::vector<FrameResult> frames;
        std::string model;
        while (std::getline(in, line)) {
            const auto f = split_csv(line);
            if (f.size() < 7) continue;
            model = f[0];
            FrameResult r;
            r.fire_id = f[1];
            r.frame_id = f[2];
            r.offset_seconds = std::stoi(f[3]);
            r.label = f[4] == "1" ? Label::positive : Label::negative;
            r.predicted_positive = f[5] == "1";
            r.image_logit = std::stod(f[6]);
            frames.push_back(r);
        }
        MetricsReport row;
        row.model = model;
        std::vector<std::uint8_t> p, l;
        for (const auto& fr : frames) p.push_back(fr.predicted_positive), l.push_back(to_bit(fr.label));
        if (!frames.empty()) row.classification = classification_metrics(p, l);
        const auto fires = group_by_fire(frames);
        row.ttd = time_to_detection(fires);
        std::ifstream info(dir / "model_info.txt");
        std::string ignored;
        if (info && std::getline(info, ignored)) info >> row.params_millions >> row.latency_ms_per_image;
        rows.push_back(row);
        write_fire_grid(build_fire_grid(fires), out / ("fire_grid_" + std::to_string(i) + ".png"),
                        out / ("fire_grid_" + std::to_string(i) + ".csv"));
    }
    write_metrics_table(out / "metrics.csv", rows);
    write_metrics_table(std::cout, rows);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SmokeyNet wildfire smoke detection: data preparation, training and evaluation"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Debug logging");

    std::string archive, manifest, url, listing;
    auto* prepare = app.add_subcommand("prepare", "Mirror and/or index an archive and validate its split manifest");
    prepare->add_option("--archive", archive, "Archive root")->required();
    prepare->add_option("--manifest", manifest, "Split manifest (default <archive>/manifest.txt)");
    prepare->add_option("--url", url, "Base URL to mirror from");
    prepare->add_option("--listing", listing, "File listing relative paths to mirror");

    SyntheticSpec spec;
    std::string synth_out = "synthetic";
    bool desk = false;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
    synth->add_option("--out", synth_out, "Output archive root");
    synth->add_option("--fires", spec.num_fires, "Number of fires");
    synth->add_option("--frames", spec.frames_per_fire, "Frames per fire");
    synth->add_option("--seed", spec.seed, "Seed");
    synth->add_option("--height", spec.height, "Raw frame height");
    synth->add_option("--width", spec.width, "Raw frame width");
    synth->add_flag("--desk", desk, "192x256 frames for the desk geometry");
    synth->add_flag("!--no-plume", spec.plume, "Render no smoke");
    synth->add_option("--box-only", spec.box_only_fraction, "Fraction of positive frames annotated with boxes");
    synth->add_option("--unannotated", spec.unannotated_fraction, "Fraction of positive frames left unannotated");

    CommonFlags train_flags, eval_flags, suite_flags;
    auto* train = app.add_subcommand("train", "Train one variant");
    add_common(train, train_flags);

    std::string checkpoint;
    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a split");
    add_common(eval, eval_flags);
    eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();

    std::string variant_list = "flagship,cnn_only,cnn_vit";
    auto* suite = app.add_subcommand("suite", "Train and evaluate a list of variants");
    add_common(suite, suite_flags);
    suite->add_option("--variants", variant_list, "Comma-separated presets");

    std::vector<std::string> report_inputs;
    std::string report_out = "report";
    auto* report = app.add_subcommand("report", "Metrics table and fire grids from eval outputs");
    report->add_option("--in", report_inputs, "Eval output directories")->required();
    report->add_option("--out", report_out, "Output directory");

    CLI11_PARSE(app, argc, argv);
    if (verbose) log::set_level(log::Level::debug);

    try {
        if (*prepare) return cmd_prepare(archive, manifest, url, listing);
        if (*synth) {
            if (desk) {
                const auto base = spec;
                spec = SyntheticSpec::desk(base.num_fires, base.frames_per_fire, base.seed);
                spec.plume = base.plume;
                spec.box_only_fraction = base.box_only_fraction;
                spec.unannotated_fraction = base.unannotated_fraction;
            }
            const auto corpus = generate_synthetic_corpus(spec, synth_out);
            std::cout << "wrote " << corpus.fires.size() << " fires, " << corpus.frame_count() << " frames to "
                      << synth_out << "\n";
            return 0;
        }
        if (*train) return cmd_train(train_flags);
        if (*eval) return cmd_eval(eval_flags, checkpoint);
        if (*suite) return cmd_suite(suite_flags, variant_list);
        if (*report) return cmd_report(report_inputs, report_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
