#pragma once

#include "smokeynet/data/types.hpp"

namespace smokeynet {

/// Chooses where a frame's tile labels come from.
///
/// Negative frames always supervise with an empty contour mask. Positive
/// frames prefer contours, fall back to filled boxes, and are excluded from
/// tile supervision when neither exists.
inline SupervisionKind resolve_supervision(const FrameRecord& frame) {
    if (!is_positive(frame.image_label)) {
        return SupervisionKind::contour;
    }
    if (frame.annotation && !frame.annotation->contours.empty()) {
        return SupervisionKind::contour;
    }
    if (frame.annotation && !frame.annotation->boxes.empty()) {
        return SupervisionKind::box_fill;
    }
    return SupervisionKind::excluded;
}

inline const char* to_string(SupervisionKind kind) {
    switch (kind) {
        case SupervisionKind::contour: return "contour";
        case SupervisionKind::box_fill: return "box_fill";
        case SupervisionKind::excluded: return "excluded";
    }
    return "unknown";
}

}  // namespace smokeynet
