#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "smokeynet/model/variant.hpp"
#include "smokeynet/objective/loss.hpp"
#include "smokeynet/preprocess/augment.hpp"
#include "smokeynet/preprocess/geometry.hpp"

namespace smokeynet {

struct DataConfig {
    std::filesystem::path archive;
    /// Empty: <archive>/manifest.txt.
    std::filesystem::path manifest;
    /// "full" (1040x1856, 224-pixel tiles) or "desk" (144x256, 32-pixel tiles).
    std::string geometry = "full";
    /// Scales resize target, crop and tile size together, keeping the 5x9 grid.
    int resize_percent = 100;
    /// Negative: the geometry's own threshold.
    int tile_threshold = -1;
    /// "diff" (frame differencing) or "mog2".
    std::string background = "diff";
    /// Preprocessed frames kept in memory (0 = no cache).
    int cache_frames = 4096;
    bool augment = true;
    AugmentationPolicy augmentation{};

    PreprocessGeometry resolved_geometry() const;
    std::filesystem::path manifest_path() const { return manifest.empty() ? archive / "manifest.txt" : manifest; }
};

struct TrainConfig {
    double learning_rate = 1e-3;
    double weight_decay = 1e-3;
    double momentum = 0.0;
    /// Global gradient-norm clip before each optimizer step (0 = off).
    double grad_clip_norm = 0.0;
    int micro_batch = 2;
    int effective_batch = 32;
    int epochs = 25;
    std::uint64_t seed = 0;
    LossWeights loss{};
    /// Intra-op threads (0 = library default).
    int threads = 0;

    int accumulation_steps() const { return effective_batch / micro_batch; }
    void validate() const;
};

struct EvalConfig {
    std::string split = "test";
    int latency_warmup = 2;
    int latency_trials = 5;
    /// Tiles per backbone call in evaluation (0 = all at once).
    int eval_chunk = 0;
};

struct RunConfig {
    DataConfig data;
    VariantConfig model;
    TrainConfig train;
    EvalConfig eval;

    /// Copies the tile layout implied by the data geometry into the model.
    void sync_model_geometry();
    void validate() const;
};

/// Sets one `section.key` from its textual value; unknown keys and bad
/// values throw ConfigError.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

/// Flat `key = value` lines, '#' comments, blank lines ignored. Starts from
/// `base`.
RunConfig parse_config(const std::string& text, RunConfig base = {}, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

/// Every addressable key with its current value, one per line.
std::string to_config_text(const RunConfig& config);
std::vector<std::string> config_keys();

/// Variant fields only (model.* keys); used inside checkpoints.
std::string variant_to_text(const VariantConfig& variant);
VariantConfig variant_from_text(const std::string& text);

/// Fixed hyperparameter grids searched sequentially in the original study.
namespace sweep {
inline const std::vector<double> kLearningRates{1e-2, 1e-3, 1e-4};
inline const std::vector<double> kWeightDecays{1e-4, 1e-3};
inline const std::vector<int> kResizePercents{100, 90, 80, 50};
inline const std::vector<int> kTileThresholds{0, 10, 100, 250};
inline const std::vector<double> kDropouts{0.0, 0.1};
inline const std::vector<double> kImagePositiveWeights{1, 2, 5, 10};

/// Key -> values of the grid, as config text, e.g. "train.learning_rate".
std::map<std::string, std::vector<std::string>> grids();
}  // namespace sweep

}  // namespace smokeynet
