#include "smokeynet/harness/suite.hpp"

#include <fstream>
#include <sstream>

#include "smokeynet/common/log.hpp"
#include "smokeynet/data/archive.hpp"
#include "smokeynet/data/manifest.hpp"
#include "smokeynet/objective/latency.hpp"

namespace smokeynet {

std::vector<SuiteEntry> suite_from_presets(const std::string& comma_separated) {
    std::vector<SuiteEntry> entries;
    std::istringstream in(comma_separated);
    std::string name;
    while (std::getline(in, name, ',')) {
        if (name.empty()) continue;
        entries.push_back({name, variants::preset(name)});
    }
    return entries;
}

double measure_model_latency(SmokeyNet& model, const FrameDataset& data, int warmup, int trials) {
    if (data.size() == 0) return 0.0;
    const bool was_training = model->is_training();
    model->eval();
    torch::NoGradGuard no_grad;
    const auto device = model->parameters().front().device();
    const auto input = data.prepare(0, false, 0).input.unsqueeze(0).to(device);
    const auto result = measure_latency([&] { model->forward(input); }, warmup, trials, 1);
    if (was_training) model->train();
    return result.ms_per_image;
}

MetricsReport make_report(const std::string& name, SmokeyNet& model, const EvaluationResult& evaluation,
                          double latency_ms) {
    MetricsReport report;
    report.model = name;
    report.classification = evaluation.metrics;
    report.ttd = evaluation.ttd;
    report.params_millions = parameters_millions(count_parameters(*model));
    report.latency_ms_per_image = latency_ms;
    return report;
}

std::vector<SuiteRun> run_suite(const std::vector<SuiteEntry>& entries, const RunConfig& base,
                                const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::vector<SuiteRun> runs;
    std::vector<MetricsReport> rows;

    std::vector<FireSequence> index;
    SplitManifest manifest;
    if (!entries.empty()) {
        index = index_archive(base.data.archive);
        manifest = load_split_manifest(base.data.manifest_path(), index).first;
    }

    for (std::size_t i = 0; i < entries.size(); ++i) {
        SuiteRun run;
        run.name = entries[i].name;
        run.seed = base.train.seed + i;
        try {
            RunConfig config = base;
            config.model = entries[i].variant;
            config.model.dropout = base.model.dropout;
            config.train.seed = run.seed;
            config.sync_model_geometry();
            const auto train = FrameDataset::from_split(index, manifest, Split::train, config.data, config.model);
            const auto val = FrameDataset::from_split(index, manifest, Split::val, config.data, config.model);
            const auto test = FrameDataset::from_split(index, manifest, Split::test, config.data, config.model);
            const auto dir = out_dir / (std::to_string(i) + "_" + run.name);
            Trainer trainer(config, dir);
            run.record = trainer.fit(train, val);
            run.evaluation = evaluate(trainer.model(), test, config.train.micro_batch);
            const double latency =
                measure_model_latency(trainer.model(), test, config.eval.latency_warmup, config.eval.latency_trials);
            run.report = make_report(run.name, trainer.model(), run.evaluation, latency);
            run.ok = true;
        } catch (const std::exception& e) {
            log::error("suite entry '", run.name, "' failed: ", e.what());
            run.error = e.what();
            run.report.model = run.name;
            run.report.failure = e.what();
        }
        rows.push_back(run.report);
        runs.push_back(std::move(run));
    }

    write_metrics_table(out_dir / "metrics.csv", rows);
    std::ofstream ttd(out_dir / "ttd_detail.csv");
    ttd << "model,fire_id,ttd_minutes,undetected\n";
    for (const auto& run : runs) {
        if (!run.ok) continue;
        std::ostringstream one;
        write_ttd_detail(one, run.name, run.report.ttd);
        const std::string text = one.str();
        ttd << text.substr(text.find('\n') + 1);
    }
    std::ofstream summary(out_dir / "suite_runs.csv");
    summary << "index,model,seed,status,selected_epoch,error\n";
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const auto& r = runs[i];
        summary << i << ",\"" << r.name << "\"," << r.seed << ',' << (r.ok ? "ok" : "failed") << ','
                << (r.ok ? std::to_string(r.record.selected_epoch) : "") << ",\"" << r.error << "\"\n";
    }
    return runs;
}

}  // namespace smokeynet
