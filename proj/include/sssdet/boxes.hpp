#ifndef SSSDET_BOXES_HPP
#define SSSDET_BOXES_HPP

#include <algorithm>

namespace sssdet {

// axis-aligned box, corner form; units are whatever the caller uses
struct Box {
    float x_min = 0.0f;
    float y_min = 0.0f;
    float x_max = 0.0f;
    float y_max = 0.0f;

    float width() const { return x_max - x_min; }
    float height() const { return y_max - y_min; }
    float area() const { return width() * height(); }

    bool operator==(const Box&) const = default;
};

inline Box box_from_center(float cx, float cy, float w, float h)
{
    return {cx - w / 2.0f, cy - h / 2.0f, cx + w / 2.0f, cy + h / 2.0f};
}

inline float intersection_area(const Box& a, const Box& b)
{
    float w = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
    float h = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
    if (w <= 0.0f || h <= 0.0f) {
        return 0.0f;
    }
    return w * h;
}

// intersection over union; 0 when disjoint or the union is degenerate
inline float iou(const Box& a, const Box& b)
{
    float inter = intersection_area(a, b);
    float uni = a.area() + b.area() - inter;
    if (uni <= 0.0f) {
        return 0.0f;
    }
    return inter / uni;
}

} // namespace sssdet

#endif
