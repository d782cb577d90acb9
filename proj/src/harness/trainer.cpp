#include "smokeynet/harness/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numeric>
#include <random>

#include "smokeynet/common/log.hpp"
#include "smokeynet/common/rng.hpp"
#include "smokeynet/model/checkpoint.hpp"

namespace smokeynet {

torch::Device compute_device() {
    const char* env = std::getenv("SMOKEYNET_DEVICE");
    if (env == nullptr || std::string(env).empty()) return torch::kCPU;
    torch::Device device{std::string(env)};
    if (device.is_cuda() && !torch::cuda::is_available()) {
        throw ConfigError("SMOKEYNET_DEVICE=" + std::string(env) + " but CUDA is not available");
    }
    return device;
}

int select_epoch(const std::vector<double>& val_errors) {
    if (val_errors.empty()) throw DefinitionError("no epochs to select from");
    const auto it = std::min_element(val_errors.begin(), val_errors.end());  // first minimum
    return static_cast<int>(std::distance(val_errors.begin(), it)) + 1;
}

int optimizer_steps_per_epoch(std::size_t examples, int micro_batch, int effective_batch) {
    const std::size_t batches = (examples + micro_batch - 1) / micro_batch;
    const std::size_t k = static_cast<std::size_t>(effective_batch / micro_batch);
    return static_cast<int>((batches + k - 1) / k);
}

std::vector<FirePredictions> group_by_fire(const std::vector<FrameResult>& frames) {
    std::vector<FirePredictions> fires;
    std::map<std::string, std::size_t> slot;
    for (const auto& f : frames) {
        auto [it, fresh] = slot.emplace(f.fire_id, fires.size());
        if (fresh) fires.push_back({f.fire_id, {}});
        fires[it->second].frames.push_back({f.offset_seconds, f.label, f.predicted_positive});
    }
    for (auto& fire : fires) {
        std::stable_sort(fire.frames.begin(), fire.frames.end(),
                         [](const auto& a, const auto& b) { return a.offset_seconds < b.offset_seconds; });
    }
    return fires;
}

EvaluationResult evaluate(SmokeyNet& model, const FrameDataset& data, int batch_size) {
    EvaluationResult result;
    if (data.size() == 0) return result;
    const bool was_training = model->is_training();
    model->eval();
    torch::NoGradGuard no_grad;
    const auto device = model->parameters().empty() ? torch::Device(torch::kCPU) : model->parameters().front().device();
    std::vector<std::uint8_t> predictions, labels;
    for (std::size_t start = 0; start < data.size(); start += batch_size) {
        std::vector<PreparedExample> examples;
        for (std::size_t i = start; i < std::min(data.size(), start + batch_size); ++i) {
            examples.push_back(data.prepare(i, false, 0));
        }
        const Batch batch = collate(examples);
        const auto logits = model->forward(batch.input.to(device)).image_logit.to(torch::kCPU).to(torch::kDouble);
        for (std::size_t j = 0; j < examples.size(); ++j) {
            FrameResult r;
            r.fire_id = examples[j].fire_id;
            r.frame_id = examples[j].frame_id;
            r.offset_seconds = examples[j].offset_seconds;
            r.label = examples[j].image_label > 0.5f ? Label::positive : Label::negative;
            r.image_logit = logits[static_cast<int64_t>(j)].item<double>();
            r.predicted_positive = r.image_logit > 0.0;
            predictions.push_back(r.predicted_positive);
            labels.push_back(to_bit(r.label));
            result.frames.push_back(std::move(r));
        }
    }
    result.metrics = classification_metrics(predictions, labels);
    result.fires = group_by_fire(result.frames);
    result.ttd = time_to_detection(result.fires);
    if (was_training) model->train();
    return result;
}

void write_run_record(const std::filesystem::path& path, const RunRecord& record) {
    std::ofstream out(path);
    if (!out) throw IngestError("cannot write " + path.string());
    out << "# " << record.variant.describe() << "\n";
    out << "epoch,train_loss,train_accuracy,val_error,checkpoint\n";
    for (const auto& e : record.epochs) {
        out << e.epoch << ',' << e.train_loss << ',' << e.train_accuracy << ',' << e.val_error << ','
            << e.checkpoint.filename().string() << '\n';
    }
    out << "selected_epoch," << record.selected_epoch << "\n";
}

Trainer::Trainer(RunConfig config, std::filesystem::path out_dir)
    : config_(std::move(config)), out_dir_(std::move(out_dir)), device_(compute_device()) {
    config_.validate();
    if (config_.train.threads > 0) torch::set_num_threads(config_.train.threads);
    const SeedStreams streams(config_.train.seed);
    torch::manual_seed(streams.seed("init"));
    model_ = build_model(config_.model);
    model_->set_eval_chunk(config_.eval.eval_chunk);
    model_->to(device_);
}

double Trainer::run_epoch(const FrameDataset& train, int epoch, torch::optim::SGD& optimizer, double& accuracy) {
    const SeedStreams streams(config_.train.seed);
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    auto order_rng = streams.engine("order", static_cast<std::uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), order_rng);

    const int micro = config_.train.micro_batch;
    const int k = config_.train.accumulation_steps();
    const std::size_t batches = (order.size() + micro - 1) / micro;

    model_->train();
    optimizer.zero_grad();
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t b = 0; b < batches; ++b) {
        const std::size_t group_start = (b / k) * k;
        const std::size_t group_size = std::min<std::size_t>(k, batches - group_start);

        std::vector<PreparedExample> examples;
        for (std::size_t j = b * micro; j < std::min(order.size(), (b + 1) * micro); ++j) {
            const auto seed = streams.seed("augment", static_cast<std::uint64_t>(epoch) * 1000003ULL + j);
            examples.push_back(train.prepare(order[j], config_.data.augment, seed));
        }
        Batch batch = collate(examples);
        batch.targets.image_labels = batch.targets.image_labels.to(device_);
        batch.targets.tile_labels = batch.targets.tile_labels.to(device_);
        const auto outputs = model_->forward(batch.input.to(device_));
        const auto loss = total_loss(outputs, batch.targets, config_.train.loss);
        const double value = loss.total_value();
        if (!std::isfinite(value)) {
            std::string ids;
            for (const auto& id : batch.ids) ids += (ids.empty() ? "" : ", ") + id;
            log::error("non-finite loss in epoch ", epoch, " on batch [", ids, "]");
            throw DivergenceError("training diverged (non-finite loss) on batch [" + ids + "]");
        }
        (loss.total / static_cast<double>(group_size)).backward();
        loss_sum += value * static_cast<double>(examples.size());
        const auto predicted = (outputs.image_logit.detach() > 0).to(torch::kCPU);
        const auto truth = batch.targets.image_labels.to(torch::kCPU) > 0.5;
        correct += static_cast<std::size_t>((predicted == truth).sum().item<int64_t>());

        if (b + 1 == group_start + group_size) {
            if (config_.train.grad_clip_norm > 0.0) {
                torch::nn::utils::clip_grad_norm_(model_->parameters(), config_.train.grad_clip_norm);
            }
            optimizer.step();
            optimizer.zero_grad();
        }
    }
    accuracy = order.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(order.size());
    return order.empty() ? 0.0 : loss_sum / static_cast<double>(order.size());
}

RunRecord Trainer::fit(const FrameDataset& train, const FrameDataset& val) {
    if (!train.has_tile_supervision()) {
        throw ConfigError("training split has no frame with tile supervision (every positive frame is unannotated)");
    }
    if (val.size() == 0) throw ConfigError("validation split is empty; checkpoint selection needs it");
    std::filesystem::create_directories(out_dir_);

    RunRecord record;
    record.variant = config_.model;
    record.train = config_.train;
    record.optimizer_steps_per_epoch =
        optimizer_steps_per_epoch(train.size(), config_.train.micro_batch, config_.train.effective_batch);

    torch::optim::SGD optimizer(model_->parameters(), torch::optim::SGDOptions(config_.train.learning_rate)
                                                          .weight_decay(config_.train.weight_decay)
                                                          .momentum(config_.train.momentum));
    std::vector<double> val_errors;
    for (int epoch = 1; epoch <= config_.train.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        EpochRecord e;
        e.epoch = epoch;
        e.train_loss = run_epoch(train, epoch, optimizer, e.train_accuracy);
        const auto eval = evaluate(model_, val, config_.train.micro_batch);
        e.val_error = eval.error_rate();
        e.checkpoint = out_dir_ / ("epoch_" + std::to_string(epoch) + ".pt");
        save_checkpoint(e.checkpoint, model_, epoch, e.val_error);
        val_errors.push_back(e.val_error);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        log::info("epoch ", epoch, "/", config_.train.epochs, " loss ", e.train_loss, " train_acc ",
                  e.train_accuracy, " val_error ", e.val_error, " (", secs, " s)");
        record.epochs.push_back(e);
        if (on_epoch) on_epoch(e);
    }
    record.selected_epoch = select_epoch(val_errors);
    record.selected_checkpoint = record.epochs[static_cast<std::size_t>(record.selected_epoch - 1)].checkpoint;
    std::filesystem::copy_file(record.selected_checkpoint, out_dir_ / "selected.pt",
                               std::filesystem::copy_options::overwrite_existing);
    write_run_record(out_dir_ / "run.csv", record);
    load_checkpoint_into(record.selected_checkpoint, model_);
    return record;
}

}  // namespace smokeynet
