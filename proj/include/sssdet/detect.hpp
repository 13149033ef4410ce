#ifndef SSSDET_DETECT_HPP
#define SSSDET_DETECT_HPP

#include <string>
#include <vector>

#include "sssdet/boxes.hpp"
#include "sssdet/netdef.hpp"
#include "sssdet/network.hpp"

namespace sssdet {

// Channel layout of the raw head tensor: for anchor a, channels
// a*(5+C) + 0..4 hold tx, ty, tw, th, to; the next C channels hold the
// class scores.
struct RegionLayout {
    int anchors = 0;
    int classes = 0;

    int chan(int anchor, int field) const { return anchor * (5 + classes) + field; }
    int depth() const { return anchors * (5 + classes); }
};

struct Detection {
    int class_id = 0;
    Box bbox; // original-image pixels, clamped to bounds
    float objectness = 0.0f;
    float class_confidence = 0.0f;
    float score = 0.0f; // objectness * class_confidence

    // provenance, for deterministic ordering; 0 for hand-built detections
    int cell = 0; // cy * S + cx
    int anchor = 0;
};

// score descending, ties by smaller cell, then anchor, then class
bool detection_order(const Detection& a, const Detection& b);

// One candidate per (cell, anchor, class) whose score reaches
// conf_threshold. Box centers are (cell + sigmoid(t)) / S, sizes are
// anchor * exp(t) / S, scaled to img_w x img_h corner form. Boxes that
// clamp to nothing are dropped.
std::vector<Detection> decode(const Tensor& raw, const std::vector<Anchor>& anchors, int classes,
                              int img_w, int img_h, float conf_threshold);

// Per-class greedy suppression: keep in score order, drop any detection
// overlapping a kept same-class box with IoU > iou_threshold. The result
// stays in detection_order.
std::vector<Detection> nms(std::vector<Detection> dets, float iou_threshold = 0.6f);

// load + stretch + forward + decode + nms, in original image coordinates
std::vector<Detection> detect_image(const std::string& image_path, const NetworkDef& def,
                                    const NetParams& params, float conf_threshold = 0.25f,
                                    float nms_iou_threshold = 0.6f);

// "name score x_min y_min width height", pixels, 2-decimal fixed
std::string detection_line(const Detection& det, const std::vector<std::string>& class_names);

} // namespace sssdet

#endif
