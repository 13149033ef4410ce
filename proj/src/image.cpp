#include "sssdet/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace sssdet {

namespace {

constexpr char kTensorMagic[4] = {'F', 'T', 'E', 'N'};

// next integer token, skipping whitespace and '#' comments
int ppm_int(std::istream& is, const std::string& path)
{
    int c = is.get();
    while (c == '#' || std::isspace(c)) {
        if (c == '#') {
            while (c != '\n' && c != EOF) {
                c = is.get();
            }
        }
        c = is.get();
    }
    int value = 0;
    bool any = false;
    while (std::isdigit(c)) {
        value = value * 10 + (c - '0');
        any = true;
        c = is.get();
    }
    if (!any) {
        throw DataError(path + ": malformed PPM header");
    }
    return value;
}

Image load_ppm(std::ifstream& ifs, const std::string& path)
{
    ifs.seekg(2); // past "P6"
    int w = ppm_int(ifs, path);
    int h = ppm_int(ifs, path);
    int maxval = ppm_int(ifs, path);
    if (w < 1 || h < 1) {
        throw DataError(strcat_msg(path, ": bad PPM dimensions ", w, "x", h));
    }
    if (maxval != 255) {
        throw DataError(strcat_msg(path, ": unsupported PPM maxval ", maxval, " (need 255)"));
    }
    // ppm_int consumed exactly one whitespace byte after the maxval

    std::vector<uint8_t> bytes(static_cast<size_t>(w) * h * 3);
    ifs.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (ifs.gcount() != static_cast<std::streamsize>(bytes.size())) {
        throw DataError(strcat_msg(path, ": PPM payload truncated, expected ", bytes.size(),
                                   " bytes, got ", ifs.gcount()));
    }

    Image img(w, h, 3);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) {
                img.at(c, y, x) = bytes[(static_cast<size_t>(y) * w + x) * 3 + c] / 255.0f;
            }
        }
    }
    return img;
}

} // namespace

Image::Image(int w, int h, int c) : width(w), height(h), channels(c)
{
    if (w < 1 || h < 1 || c < 1) {
        throw DataError(strcat_msg("image dimensions must be >= 1, got ", w, "x", h, "x", c));
    }
    data.assign(static_cast<size_t>(w) * h * c, 0.0f);
}

Image load_image(const std::string& path)
{
    std::ifstream ifs(path, std::ios::binary);
    if (!ifs) {
        throw IoError("cannot open image: " + path);
    }
    char magic[2] = {0, 0};
    ifs.read(magic, 2);
    if (magic[0] == 'P' && magic[1] == '6') {
        return load_ppm(ifs, path);
    }
    if (magic[0] == 'F' && magic[1] == 'T') {
        ifs.close();
        return to_image(load_tensor(path));
    }
    throw DataError(path + ": not a P6 PPM or raw tensor file");
}

void save_ppm(const Image& img, const std::string& path)
{
    if (img.channels != 3) {
        throw DataError(strcat_msg("PPM output needs 3 channels, image has ", img.channels));
    }
    std::ofstream ofs(path, std::ios::binary | std::ios::trunc);
    if (!ofs) {
        throw IoError("cannot open image for writing: " + path);
    }
    ofs << "P6\n" << img.width << " " << img.height << "\n255\n";
    std::vector<uint8_t> row(static_cast<size_t>(img.width) * 3);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                float v = std::clamp(img.at(c, y, x), 0.0f, 1.0f);
                row[static_cast<size_t>(x) * 3 + c] = static_cast<uint8_t>(v * 255.0f + 0.5f);
            }
        }
        ofs.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size()));
    }
    if (!ofs) {
        throw IoError("write failed: " + path);
    }
}

Image resize_bilinear(const Image& src, int out_w, int out_h)
{
    if (out_w < 1 || out_h < 1) {
        throw DataError(strcat_msg("resize target must be >= 1, got ", out_w, "x", out_h));
    }
    if (out_w == src.width && out_h == src.height) {
        return src;
    }
    Image dst(out_w, out_h, src.channels);
    float sx = static_cast<float>(src.width) / out_w;
    float sy = static_cast<float>(src.height) / out_h;
    for (int y = 0; y < out_h; ++y) {
        float fy = std::clamp((y + 0.5f) * sy - 0.5f, 0.0f, static_cast<float>(src.height - 1));
        int y0 = static_cast<int>(fy);
        int y1 = std::min(y0 + 1, src.height - 1);
        float wy = fy - y0;
        for (int x = 0; x < out_w; ++x) {
            float fx = std::clamp((x + 0.5f) * sx - 0.5f, 0.0f, static_cast<float>(src.width - 1));
            int x0 = static_cast<int>(fx);
            int x1 = std::min(x0 + 1, src.width - 1);
            float wx = fx - x0;
            for (int c = 0; c < src.channels; ++c) {
                float top = src.at(c, y0, x0) * (1.0f - wx) + src.at(c, y0, x1) * wx;
                float bot = src.at(c, y1, x0) * (1.0f - wx) + src.at(c, y1, x1) * wx;
                dst.at(c, y, x) = top * (1.0f - wy) + bot * wy;
            }
        }
    }
    return dst;
}

Image crop(const Image& src, int x, int y, int w, int h)
{
    if (x < 0 || y < 0 || w < 1 || h < 1 || x + w > src.width || y + h > src.height) {
        throw DataError(strcat_msg("crop ", w, "x", h, "(+", x, ",+", y,
                                   ") falls outside a ", src.width, "x", src.height, " image"));
    }
    Image out(w, h, src.channels);
    for (int c = 0; c < src.channels; ++c) {
        for (int row = 0; row < h; ++row) {
            const float* from =
                src.data.data() + (static_cast<size_t>(c) * src.height + y + row) * src.width + x;
            float* to = out.data.data() + (static_cast<size_t>(c) * h + row) * w;
            std::memcpy(to, from, static_cast<size_t>(w) * sizeof(float));
        }
    }
    return out;
}

Tensor to_tensor(const Image& img)
{
    Tensor t(1, img.channels, img.height, img.width);
    std::copy(img.data.begin(), img.data.end(), t.data());
    return t;
}

Image to_image(const Tensor& t)
{
    if (t.shape().n != 1) {
        throw DataError(strcat_msg("tensor batch must be 1 to view as image, got ", t.shape().n));
    }
    Image img(t.shape().w, t.shape().h, t.shape().c);
    std::copy(t.data(), t.data() + t.count(), img.data.begin());
    return img;
}

void save_tensor(const Tensor& t, const std::string& path)
{
    std::ofstream ofs(path, std::ios::binary | std::ios::trunc);
    if (!ofs) {
        throw IoError("cannot open tensor file for writing: " + path);
    }
    ofs.write(kTensorMagic, 4);
    int32_t dims[4] = {t.shape().n, t.shape().c, t.shape().h, t.shape().w};
    ofs.write(reinterpret_cast<const char*>(dims), 16);
    ofs.write(reinterpret_cast<const char*>(t.data()), t.count() * 4);
    if (!ofs) {
        throw IoError("write failed: " + path);
    }
}

Tensor load_tensor(const std::string& path)
{
    std::ifstream ifs(path, std::ios::binary | std::ios::ate);
    if (!ifs) {
        throw IoError("cannot open tensor file: " + path);
    }
    int64_t size = static_cast<int64_t>(ifs.tellg());
    ifs.seekg(0);
    char magic[4] = {0, 0, 0, 0};
    int32_t dims[4] = {0, 0, 0, 0};
    if (size < 20) {
        throw DataError(strcat_msg(path, ": ", size, " bytes is too short for a tensor header"));
    }
    ifs.read(magic, 4);
    if (std::memcmp(magic, kTensorMagic, 4) != 0) {
        throw DataError(path + ": bad tensor magic");
    }
    ifs.read(reinterpret_cast<char*>(dims), 16);
    if (dims[0] < 1 || dims[1] < 1 || dims[2] < 1 || dims[3] < 1) {
        throw DataError(strcat_msg(path, ": bad tensor dims ", dims[0], "x", dims[1], "x",
                                   dims[2], "x", dims[3]));
    }
    Tensor t(dims[0], dims[1], dims[2], dims[3]);
    int64_t expected = 20 + t.count() * 4;
    if (size != expected) {
        throw DataError(strcat_msg(path, ": expected ", expected, " bytes, found ", size));
    }
    ifs.read(reinterpret_cast<char*>(t.data()), t.count() * 4);
    return t;
}

Tensor load_and_resize(const std::string& path, int target_w, int target_h)
{
    return to_tensor(resize_bilinear(load_image(path), target_w, target_h));
}

} // namespace sssdet
