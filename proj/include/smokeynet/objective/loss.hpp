#pragma once

#include <string>
#include <utility>
#include <vector>

#include <torch/torch.h>

#include "smokeynet/data/types.hpp"
#include "smokeynet/model/smokeynet.hpp"

namespace smokeynet {

struct LossWeights {
    double tile_positive = 40.0;
    double image_positive = 5.0;
    /// Divide each stage's summed tile term by the tile count. Off by
    /// default: the 45 positions are summed as written.
    bool normalize_tiles = false;

    void validate() const {
        if (!(tile_positive > 0.0) || !(image_positive > 0.0)) {
            throw ConfigError("loss weights must be strictly positive");
        }
    }
};

/// Targets for one batch.
struct LossTargets {
    torch::Tensor image_labels;        // (B,) 0/1
    torch::Tensor tile_labels;         // (B, N) 0/1; rows of excluded examples are ignored
    torch::Tensor tile_labels_present; // (B,) bool
    std::vector<SupervisionKind> supervision;
};

struct LossBreakdown {
    torch::Tensor image_term;
    std::vector<std::pair<std::string, torch::Tensor>> tile_terms;
    torch::Tensor total;

    double total_value() const { return total.item<double>(); }
};

/// Elementwise weighted BCE on logits, probabilities clamped before logs.
torch::Tensor weighted_bce_elementwise(const torch::Tensor& logits, const torch::Tensor& labels,
                                       double positive_weight);

/// Image term plus one summed tile term per present stage; excluded
/// examples contribute to the image term only.
LossBreakdown total_loss(const ModelOutputs& outputs, const LossTargets& targets, const LossWeights& weights);

}  // namespace smokeynet
