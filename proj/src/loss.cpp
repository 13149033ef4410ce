#include "sssdet/loss.hpp"

#include <cmath>
#include <unordered_map>

namespace sssdet {

namespace {

// IoU of two co-centered boxes given only their sizes
float shape_iou(float w1, float h1, float w2, float h2)
{
    float inter = std::min(w1, w2) * std::min(h1, h2);
    float uni = w1 * h1 + w2 * h2 - inter;
    return uni <= 0.0f ? 0.0f : inter / uni;
}

} // namespace

std::vector<AnchorAssignment> assign_anchors(const std::vector<GroundTruthBox>& truths,
                                             const std::vector<Anchor>& anchors, int S)
{
    if (anchors.empty() || S < 1) {
        throw ConfigError("anchor assignment needs anchors and a positive grid size");
    }
    std::vector<AnchorAssignment> out;
    out.reserve(truths.size());
    for (size_t t = 0; t < truths.size(); ++t) {
        const GroundTruthBox& b = truths[t];
        if (b.cx < 0.0f || b.cx > 1.0f || b.cy < 0.0f || b.cy > 1.0f || b.w <= 0.0f ||
            b.w > 1.0f || b.h <= 0.0f || b.h > 1.0f) {
            throw DataError(strcat_msg("truth ", t, ": box (", b.cx, ", ", b.cy, ", ", b.w, ", ",
                                       b.h, ") is not normalized"));
        }
        AnchorAssignment a;
        a.cell_x = std::min(static_cast<int>(b.cx * S), S - 1);
        a.cell_y = std::min(static_cast<int>(b.cy * S), S - 1);
        float best = -1.0f;
        for (size_t k = 0; k < anchors.size(); ++k) {
            float overlap = shape_iou(b.w, b.h, anchors[k].w / S, anchors[k].h / S);
            if (overlap > best) {
                best = overlap;
                a.anchor = static_cast<int>(k);
            }
        }
        out.push_back(a);
    }
    return out;
}

float region_loss(const Tensor& raw, const std::vector<GroundTruthBox>& truths,
                  const std::vector<Anchor>& anchors, int classes, const RegionLossConfig& cfg,
                  Tensor& grad)
{
    RegionLayout layout{static_cast<int>(anchors.size()), classes};
    const Shape4& s = raw.shape();
    if (s.n != 1 || s.c != layout.depth() || s.h != s.w) {
        throw ConfigError(strcat_msg("region loss expects a 1x", layout.depth(),
                                     "xSxS head tensor, got ", s.n, "x", s.c, "x", s.h, "x",
                                     s.w));
    }
    const int S = s.h;
    const int A = layout.anchors;
    const LossScales& sc = cfg.scales;

    for (size_t t = 0; t < truths.size(); ++t) {
        if (truths[t].class_id >= classes) {
            throw DataError(strcat_msg("truth ", t, ": class id ", truths[t].class_id,
                                       " but the head has ", classes, " classes"));
        }
    }
    std::vector<AnchorAssignment> assignments = assign_anchors(truths, anchors, S);
    // (cell, anchor) -> truth index; later truths overwrite earlier ones
    std::unordered_map<int, int> responsible;
    for (size_t t = 0; t < assignments.size(); ++t) {
        const AnchorAssignment& a = assignments[t];
        responsible[(a.cell_y * S + a.cell_x) * A + a.anchor] = static_cast<int>(t);
    }

    std::vector<Box> truth_boxes;
    truth_boxes.reserve(truths.size());
    for (const GroundTruthBox& t : truths) {
        truth_boxes.push_back(t.box());
    }

    grad = Tensor(raw.shape());
    double loss = 0.0;
    std::vector<float> scores(static_cast<size_t>(classes));
    std::vector<float> probs(static_cast<size_t>(classes));

    for (int cy = 0; cy < S; ++cy) {
        for (int cx = 0; cx < S; ++cx) {
            for (int a = 0; a < A; ++a) {
                const float tx = raw.at(0, layout.chan(a, 0), cy, cx);
                const float ty = raw.at(0, layout.chan(a, 1), cy, cx);
                const float tw = raw.at(0, layout.chan(a, 2), cy, cx);
                const float th = raw.at(0, layout.chan(a, 3), cy, cx);
                const float to = raw.at(0, layout.chan(a, 4), cy, cx);
                const float stx = sigmoid(tx), sty = sigmoid(ty), sto = sigmoid(to);

                auto hit = responsible.find((cy * S + cx) * A + a);
                if (hit == responsible.end()) {
                    // suppress objectness unless the decoded box already
                    // overlaps some truth well
                    Box decoded = box_from_center(
                        (cx + stx) / S, (cy + sty) / S,
                        anchors[static_cast<size_t>(a)].w * std::exp(tw) / S,
                        anchors[static_cast<size_t>(a)].h * std::exp(th) / S);
                    float best = 0.0f;
                    for (const Box& tb : truth_boxes) {
                        best = std::max(best, iou(decoded, tb));
                    }
                    if (best <= cfg.ignore_iou_threshold) {
                        loss += sc.noobject * sto * sto;
                        grad.at(0, layout.chan(a, 4), cy, cx) =
                            sc.noobject * 2.0f * sto * sigmoid_grad_from_output(sto);
                    }
                    continue;
                }

                const GroundTruthBox& t = truths[static_cast<size_t>(hit->second)];
                const float tgt_x = t.cx * S - cx;
                const float tgt_y = t.cy * S - cy;
                const float tgt_w = std::log(t.w * S / anchors[static_cast<size_t>(a)].w);
                const float tgt_h = std::log(t.h * S / anchors[static_cast<size_t>(a)].h);

                loss += sc.coord * ((stx - tgt_x) * (stx - tgt_x) + (sty - tgt_y) * (sty - tgt_y) +
                                    (tw - tgt_w) * (tw - tgt_w) + (th - tgt_h) * (th - tgt_h));
                grad.at(0, layout.chan(a, 0), cy, cx) =
                    sc.coord * 2.0f * (stx - tgt_x) * sigmoid_grad_from_output(stx);
                grad.at(0, layout.chan(a, 1), cy, cx) =
                    sc.coord * 2.0f * (sty - tgt_y) * sigmoid_grad_from_output(sty);
                grad.at(0, layout.chan(a, 2), cy, cx) = sc.coord * 2.0f * (tw - tgt_w);
                grad.at(0, layout.chan(a, 3), cy, cx) = sc.coord * 2.0f * (th - tgt_h);

                loss += sc.object * (sto - 1.0f) * (sto - 1.0f);
                grad.at(0, layout.chan(a, 4), cy, cx) =
                    sc.object * 2.0f * (sto - 1.0f) * sigmoid_grad_from_output(sto);

                for (int c = 0; c < classes; ++c) {
                    scores[static_cast<size_t>(c)] = raw.at(0, layout.chan(a, 5 + c), cy, cx);
                }
                softmax(scores, probs);
                float dot = 0.0f; // sum_c (p_c - y_c) * p_c, shared by every logit's grad
                for (int c = 0; c < classes; ++c) {
                    const float y = c == t.class_id ? 1.0f : 0.0f;
                    const float d = probs[static_cast<size_t>(c)] - y;
                    loss += sc.cls * d * d;
                    dot += d * probs[static_cast<size_t>(c)];
                }
                for (int c = 0; c < classes; ++c) {
                    const float y = c == t.class_id ? 1.0f : 0.0f;
                    const float p = probs[static_cast<size_t>(c)];
                    grad.at(0, layout.chan(a, 5 + c), cy, cx) =
                        sc.cls * 2.0f * p * ((p - y) - dot);
                }
            }
        }
    }
    return static_cast<float>(loss);
}

} // namespace sssdet
