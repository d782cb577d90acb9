#include "smokeynet/model/checkpoint.hpp"

#include "smokeynet/harness/config.hpp"

namespace smokeynet {

namespace {

void write_module(torch::serialize::OutputArchive& archive, torch::nn::Module& module) {
    torch::serialize::OutputArchive weights;
    for (const auto& p : module.named_parameters(true)) weights.write(p.key(), p.value());
    for (const auto& b : module.named_buffers(true)) weights.write(b.key(), b.value(), true);
    archive.write("weights", weights);
}

CheckpointMeta read_meta(torch::serialize::InputArchive& archive, const std::filesystem::path& path) {
    CheckpointMeta meta;
    c10::IValue value;
    if (!archive.try_read("format_version", value)) throw ConfigError("not a checkpoint: " + path.string());
    meta.format_version = value.toInt();
    if (meta.format_version != kCheckpointFormatVersion) {
        throw ConfigError("checkpoint " + path.string() + " has format version " +
                          std::to_string(meta.format_version) + ", expected " +
                          std::to_string(kCheckpointFormatVersion));
    }
    archive.read("variant", value);
    meta.variant = variant_from_text(value.toStringRef());
    archive.read("epoch", value);
    meta.epoch = static_cast<int>(value.toInt());
    archive.read("val_error", value);
    meta.val_error = value.toDouble();
    return meta;
}

void read_weights(torch::serialize::InputArchive& archive, SmokeyNet& model) {
    torch::serialize::InputArchive weights;
    archive.read("weights", weights);
    torch::NoGradGuard no_grad;
    for (auto& p : model->named_parameters(true)) {
        torch::Tensor t;
        weights.read(p.key(), t);
        p.value().copy_(t);
    }
    for (auto& b : model->named_buffers(true)) {
        torch::Tensor t;
        weights.read(b.key(), t, true);
        b.value().copy_(t);
    }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, SmokeyNet& model, int epoch, double val_error) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    torch::serialize::OutputArchive archive;
    archive.write("format_version", c10::IValue(kCheckpointFormatVersion));
    archive.write("variant", c10::IValue(variant_to_text(model->config())));
    archive.write("epoch", c10::IValue(static_cast<int64_t>(epoch)));
    archive.write("val_error", c10::IValue(val_error));
    write_module(archive, *model);
    const auto tmp = path.string() + ".tmp";
    archive.save_to(tmp);
    std::filesystem::rename(tmp, path);
}

CheckpointMeta read_checkpoint_meta(const std::filesystem::path& path) {
    torch::serialize::InputArchive archive;
    archive.load_from(path.string());
    return read_meta(archive, path);
}

CheckpointMeta load_checkpoint_into(const std::filesystem::path& path, SmokeyNet& model) {
    torch::serialize::InputArchive archive;
    archive.load_from(path.string());
    auto meta = read_meta(archive, path);
    if (variant_to_text(meta.variant) != variant_to_text(model->config())) {
        throw ConfigError("checkpoint " + path.string() + " was written for a different variant:\n" +
                          variant_to_text(meta.variant));
    }
    read_weights(archive, model);
    return meta;
}

std::pair<SmokeyNet, CheckpointMeta> load_checkpoint(const std::filesystem::path& path) {
    auto meta = read_checkpoint_meta(path);
    auto variant = meta.variant;
    variant.pretrained_backbone = false;  // weights come from the file
    variant.pretrained_weights.clear();
    SmokeyNet model(variant);
    torch::serialize::InputArchive archive;
    archive.load_from(path.string());
    read_weights(archive, model);
    return {model, meta};
}

}  // namespace smokeynet
