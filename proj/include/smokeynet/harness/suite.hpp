#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "smokeynet/harness/config.hpp"
#include "smokeynet/harness/trainer.hpp"
#include "smokeynet/objective/report.hpp"

namespace smokeynet {

struct SuiteEntry {
    std::string name;
    VariantConfig variant;
};

struct SuiteRun {
    std::string name;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    RunRecord record;
    MetricsReport report;
    EvaluationResult evaluation;
};

/// Parses "flagship,cnn_only,..." into preset entries.
std::vector<SuiteEntry> suite_from_presets(const std::string& comma_separated);

/// Batch-size-1 latency of the model on one example of `data`, ms per image.
double measure_model_latency(SmokeyNet& model, const FrameDataset& data, int warmup, int trials);

/// Metrics row for an evaluated model.
MetricsReport make_report(const std::string& name, SmokeyNet& model, const EvaluationResult& evaluation,
                          double latency_ms);

/// Trains and evaluates every entry in order on the configured archive.
/// Entry i uses seed base.train.seed + i, so repeated entries are
/// independent runs. A failing entry is recorded and the suite goes on.
/// Writes <out>/metrics.csv, <out>/ttd_detail.csv and <out>/suite_runs.csv.
std::vector<SuiteRun> run_suite(const std::vector<SuiteEntry>& entries, const RunConfig& base,
                                const std::filesystem::path& out_dir);

}  // namespace smokeynet
