#include "sssdet/detect.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "sssdet/image.hpp"

namespace sssdet {

bool detection_order(const Detection& a, const Detection& b)
{
    if (a.score != b.score) {
        return a.score > b.score;
    }
    if (a.cell != b.cell) {
        return a.cell < b.cell;
    }
    if (a.anchor != b.anchor) {
        return a.anchor < b.anchor;
    }
    return a.class_id < b.class_id;
}

std::vector<Detection> decode(const Tensor& raw, const std::vector<Anchor>& anchors, int classes,
                              int img_w, int img_h, float conf_threshold)
{
    RegionLayout layout{static_cast<int>(anchors.size()), classes};
    const Shape4& s = raw.shape();
    if (s.n != 1 || s.c != layout.depth() || s.h != s.w) {
        throw ConfigError(strcat_msg("head tensor must be 1x", layout.depth(),
                                     "xSxS for ", layout.anchors, " anchors and ", classes,
                                     " classes, got ", s.n, "x", s.c, "x", s.h, "x", s.w));
    }
    const int S = s.h;
    const float fw = static_cast<float>(img_w);
    const float fh = static_cast<float>(img_h);

    std::vector<Detection> dets;
    std::vector<float> probs(static_cast<size_t>(classes));
    for (int cy = 0; cy < S; ++cy) {
        for (int cx = 0; cx < S; ++cx) {
            for (int a = 0; a < layout.anchors; ++a) {
                const float objectness = sigmoid(raw.at(0, layout.chan(a, 4), cy, cx));

                std::vector<float> scores(static_cast<size_t>(classes));
                for (int c = 0; c < classes; ++c) {
                    scores[static_cast<size_t>(c)] = raw.at(0, layout.chan(a, 5 + c), cy, cx);
                }
                softmax(scores, probs);

                const float bx = (cx + sigmoid(raw.at(0, layout.chan(a, 0), cy, cx))) / S;
                const float by = (cy + sigmoid(raw.at(0, layout.chan(a, 1), cy, cx))) / S;
                const float bw = anchors[static_cast<size_t>(a)].w *
                                 std::exp(raw.at(0, layout.chan(a, 2), cy, cx)) / S;
                const float bh = anchors[static_cast<size_t>(a)].h *
                                 std::exp(raw.at(0, layout.chan(a, 3), cy, cx)) / S;

                for (int c = 0; c < classes; ++c) {
                    const float score = objectness * probs[static_cast<size_t>(c)];
                    if (score < conf_threshold) {
                        continue;
                    }
                    Box box = box_from_center(bx * fw, by * fh, bw * fw, bh * fh);
                    box.x_min = std::clamp(box.x_min, 0.0f, fw);
                    box.x_max = std::clamp(box.x_max, 0.0f, fw);
                    box.y_min = std::clamp(box.y_min, 0.0f, fh);
                    box.y_max = std::clamp(box.y_max, 0.0f, fh);
                    if (box.width() <= 0.0f || box.height() <= 0.0f) {
                        continue;
                    }
                    Detection d;
                    d.class_id = c;
                    d.bbox = box;
                    d.objectness = objectness;
                    d.class_confidence = probs[static_cast<size_t>(c)];
                    d.score = score;
                    d.cell = cy * S + cx;
                    d.anchor = a;
                    dets.push_back(d);
                }
            }
        }
    }
    return dets;
}

std::vector<Detection> nms(std::vector<Detection> dets, float iou_threshold)
{
    std::sort(dets.begin(), dets.end(), detection_order);
    std::vector<Detection> kept;
    for (const Detection& d : dets) {
        bool suppressed = false;
        for (const Detection& k : kept) {
            if (k.class_id == d.class_id && iou(k.bbox, d.bbox) > iou_threshold) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) {
            kept.push_back(d);
        }
    }
    return kept;
}

std::vector<Detection> detect_image(const std::string& image_path, const NetworkDef& def,
                                    const NetParams& params, float conf_threshold,
                                    float nms_iou_threshold)
{
    if (!def.has_region()) {
        throw ConfigError("detection needs a config with a [region] layer");
    }
    Image img = load_image(image_path);
    Tensor input = to_tensor(resize_bilinear(img, def.input_w, def.input_h));
    Tensor raw = forward_infer(def, params, input);
    const LayerSpec& region = def.region();
    std::vector<Detection> dets =
        decode(raw, region.anchors, region.classes, img.width, img.height, conf_threshold);
    return nms(std::move(dets), nms_iou_threshold);
}

std::string detection_line(const Detection& det, const std::vector<std::string>& class_names)
{
    std::string name = det.class_id < static_cast<int>(class_names.size())
                           ? class_names[static_cast<size_t>(det.class_id)]
                           : strcat_msg("class_", det.class_id);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s %.2f %.2f %.2f %.2f %.2f", name.c_str(), det.score,
                  det.bbox.x_min, det.bbox.y_min, det.bbox.width(), det.bbox.height());
    return buf;
}

} // namespace sssdet
