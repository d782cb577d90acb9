#include "smokeynet/objective/loss.hpp"

#include <cmath>

#include "smokeynet/data/supervision.hpp"
#include "smokeynet/objective/bce.hpp"

namespace smokeynet {

torch::Tensor weighted_bce_elementwise(const torch::Tensor& logits, const torch::Tensor& labels,
                                       double positive_weight) {
    // Values are those of the clamped probabilities. The gradient is the
    // unclamped one, otherwise a saturated wrong logit would never recover.
    const double lo = std::log(kProbabilityEpsilon);
    const double hi = std::log1p(-kProbabilityEpsilon);
    const auto clamped_log = [&](const torch::Tensor& raw) { return raw + (raw.clamp(lo, hi) - raw).detach(); };
    const auto log_p = clamped_log(torch::log_sigmoid(logits));
    const auto log_q = clamped_log(torch::log_sigmoid(-logits));
    const auto y = labels.to(logits.dtype());
    return -(positive_weight * y * log_p + (1.0 - y) * log_q);
}

LossBreakdown total_loss(const ModelOutputs& outputs, const LossTargets& targets, const LossWeights& weights) {
    weights.validate();
    const auto& image_logit = outputs.image_logit;
    const int64_t batch = image_logit.size(0);
    if (batch == 0) throw DefinitionError("loss of an empty batch is undefined");
    if (targets.image_labels.numel() != batch || static_cast<int64_t>(targets.supervision.size()) != batch) {
        throw DefinitionError("loss targets do not match the batch size");
    }

    LossBreakdown out;
    out.image_term = weighted_bce_elementwise(image_logit, targets.image_labels, weights.image_positive).mean();
    out.total = out.image_term;

    std::vector<int64_t> included;
    for (int64_t i = 0; i < batch; ++i) {
        if (targets.supervision[i] == SupervisionKind::excluded) continue;
        if (!targets.tile_labels_present.defined() || !targets.tile_labels_present[i].item<bool>()) {
            throw SupervisionError("example " + std::to_string(i) + " is " + to_string(targets.supervision[i]) +
                                   "-supervised but has no tile labels");
        }
        included.push_back(i);
    }

    for (const auto& [name, logits] : outputs.stages()) {
        torch::Tensor term;
        if (included.empty()) {
            term = torch::zeros({}, logits.options());
        } else {
            auto index = torch::tensor(included, torch::TensorOptions().dtype(torch::kLong).device(logits.device()));
            auto l = logits.index_select(0, index);
            auto y = targets.tile_labels.to(logits.device()).index_select(0, index);
            // mean over examples per position, summed over positions
            term = weighted_bce_elementwise(l, y, weights.tile_positive).mean(0).sum();
            if (weights.normalize_tiles) term = term / static_cast<double>(logits.size(1));
        }
        out.total = out.total + term;
        out.tile_terms.emplace_back(name, term);
    }
    return out;
}

}  // namespace smokeynet
