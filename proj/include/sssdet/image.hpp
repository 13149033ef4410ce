#ifndef SSSDET_IMAGE_HPP
#define SSSDET_IMAGE_HPP

#include <string>
#include <vector>

#include "sssdet/tensor.hpp"

namespace sssdet {

// Planar float image, values in [0, 1], channel-major (c, y, x).
struct Image {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<float> data;

    Image() = default;
    Image(int w, int h, int c);

    float at(int c, int y, int x) const
    {
        return data[(static_cast<size_t>(c) * height + y) * width + x];
    }
    float& at(int c, int y, int x)
    {
        return data[(static_cast<size_t>(c) * height + y) * width + x];
    }
};

// Reads binary PPM (P6, maxval 255) or a raw tensor file (see save_tensor);
// the format is chosen by content, not extension.
Image load_image(const std::string& path);

// clamps to [0, 1] and quantizes to 8-bit; 3-channel images only
void save_ppm(const Image& img, const std::string& path);

// Plain stretch with the half-pixel convention:
// src_x = (dst_x + 0.5) * src_w / dst_w - 0.5, clamped, 4-tap blend.
Image resize_bilinear(const Image& src, int out_w, int out_h);

// axis-aligned pixel copy; the rectangle must lie inside src
Image crop(const Image& src, int x, int y, int w, int h);

// (1, c, h, w) view of the image
Tensor to_tensor(const Image& img);
Image to_image(const Tensor& t); // batch size must be 1

// Raw tensor file: "FTEN",4 x int32 dims (n, c, h, w), float32 payload,
// all little-endian.
void save_tensor(const Tensor& t, const std::string& path);
Tensor load_tensor(const std::string& path);

// load_image + resize_bilinear + to_tensor
Tensor load_and_resize(const std::string& path, int target_w, int target_h);

} // namespace sssdet

#endif
