#ifndef SSSDET_LOSS_HPP
#define SSSDET_LOSS_HPP

#include <vector>

#include "sssdet/detect.hpp"
#include "sssdet/labels.hpp"
#include "sssdet/netdef.hpp"
#include "sssdet/tensor.hpp"

namespace sssdet {

struct LossScales {
    float coord = 1.0f;
    float object = 5.0f;
    float noobject = 1.0f;
    float cls = 1.0f;
};

struct RegionLossConfig {
    LossScales scales;
    // non-responsible anchors whose best decoded IoU exceeds this escape the
    // noobject penalty
    float ignore_iou_threshold = 0.6f;
};

// the (cell, anchor) responsible for one ground-truth box
struct AnchorAssignment {
    int cell_x = 0;
    int cell_y = 0;
    int anchor = 0;
};

// Cell is (floor(cx*S), floor(cy*S)) clamped to S-1. The anchor is the
// argmax of co-centered IoU between (w, h) and (pw/S, ph/S); ties keep the
// lowest index.
std::vector<AnchorAssignment> assign_anchors(const std::vector<GroundTruthBox>& truths,
                                             const std::vector<Anchor>& anchors, int S);

// Sum-of-squares region loss over a single-image head tensor (1, A*(5+C),
// S, S). Responsible anchors pay coord, object, and class terms; the rest
// pay noobject on sigmoid(to) unless their decoded box overlaps a truth
// beyond the ignore threshold. Two truths landing on one (cell, anchor):
// the later one wins. grad receives d(loss)/d(raw).
float region_loss(const Tensor& raw, const std::vector<GroundTruthBox>& truths,
                  const std::vector<Anchor>& anchors, int classes, const RegionLossConfig& cfg,
                  Tensor& grad);

} // namespace sssdet

#endif
