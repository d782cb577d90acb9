#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "smokeynet/harness/config.hpp"
#include "smokeynet/harness/dataset.hpp"
#include "smokeynet/model/smokeynet.hpp"
#include "smokeynet/objective/metrics.hpp"
#include "smokeynet/objective/ttd.hpp"

namespace smokeynet {

/// Device named by SMOKEYNET_DEVICE ("cpu" default, "cuda", "cuda:1", ...).
torch::Device compute_device();

struct EpochRecord {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    /// Image accuracy of the training forward passes (augmented, train mode).
    double train_accuracy = 0.0;
    double val_error = 0.0;
    std::filesystem::path checkpoint;
};

struct RunRecord {
    VariantConfig variant;
    TrainConfig train;
    std::vector<EpochRecord> epochs;
    int selected_epoch = 0;
    std::filesystem::path selected_checkpoint;
    int optimizer_steps_per_epoch = 0;
};

/// 1-based epoch of the smallest validation error; ties go to the earliest.
int select_epoch(const std::vector<double>& val_errors);

/// ceil(micro-batches / accumulation steps).
int optimizer_steps_per_epoch(std::size_t examples, int micro_batch, int effective_batch);

struct FrameResult {
    std::string fire_id;
    std::string frame_id;
    int offset_seconds = 0;
    Label label = Label::negative;
    bool predicted_positive = false;
    double image_logit = 0.0;
};

struct EvaluationResult {
    std::vector<FrameResult> frames;
    ClassificationMetrics metrics;
    std::vector<FirePredictions> fires;
    TtdSummary ttd;
    double error_rate() const { return 1.0 - metrics.accuracy; }
};

/// Evaluation-mode pass without augmentation.
EvaluationResult evaluate(SmokeyNet& model, const FrameDataset& data, int batch_size);

/// Groups per-frame results by fire, ordered by offset.
std::vector<FirePredictions> group_by_fire(const std::vector<FrameResult>& frames);

/// Writes one line per epoch plus the selection.
void write_run_record(const std::filesystem::path& path, const RunRecord& record);

/// Accumulated-gradient SGD on the intermediate-supervision loss with
/// per-epoch checkpoints and validation-error checkpoint selection.
class Trainer {
public:
    Trainer(RunConfig config, std::filesystem::path out_dir);

    RunRecord fit(const FrameDataset& train, const FrameDataset& val);

    SmokeyNet& model() { return model_; }
    const RunConfig& config() const { return config_; }

    /// Called after every epoch (for progress output).
    std::function<void(const EpochRecord&)> on_epoch;

private:
    double run_epoch(const FrameDataset& train, int epoch, torch::optim::SGD& optimizer, double& accuracy);

    RunConfig config_;
    std::filesystem::path out_dir_;
    torch::Device device_;
    SmokeyNet model_{nullptr};
};

}  // namespace smokeynet
