#pragma once

#include <filesystem>
#include <string>

#include "smokeynet/model/smokeynet.hpp"

namespace smokeynet {

inline constexpr int64_t kCheckpointFormatVersion = 1;

struct CheckpointMeta {
    VariantConfig variant;
    int epoch = 0;
    double val_error = 0.0;
    int64_t format_version = kCheckpointFormatVersion;
};

/// Weights, buffers, the full variant config, epoch and validation error.
void save_checkpoint(const std::filesystem::path& path, SmokeyNet& model, int epoch, double val_error);

CheckpointMeta read_checkpoint_meta(const std::filesystem::path& path);

/// Rebuilds the stored variant and loads its weights (no pretrained
/// download; weights come from the checkpoint).
std::pair<SmokeyNet, CheckpointMeta> load_checkpoint(const std::filesystem::path& path);

/// Loads weights into an already built model; throws ConfigError when the
/// stored variant differs.
CheckpointMeta load_checkpoint_into(const std::filesystem::path& path, SmokeyNet& model);

}  // namespace smokeynet
