#include "doctest.h"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <utility>
#include <vector>

#include "sssdet/image.hpp"

using namespace sssdet;
namespace fs = std::filesystem;

namespace {

std::string tmp_path(const std::string& name)
{
    return (fs::temp_directory_path() / name).string();
}

void write_bytes(const std::string& path, const std::string& bytes)
{
    std::ofstream ofs(path, std::ios::binary | std::ios::trunc);
    ofs.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

// independent re-statement of the resize mapping, plain nested loops
Image resize_oracle(const Image& src, int out_w, int out_h)
{
    Image dst(out_w, out_h, src.channels);
    for (int c = 0; c < src.channels; ++c) {
        for (int y = 0; y < out_h; ++y) {
            for (int x = 0; x < out_w; ++x) {
                double fy = (y + 0.5) * src.height / out_h - 0.5;
                double fx = (x + 0.5) * src.width / out_w - 0.5;
                fy = std::min(std::max(fy, 0.0), static_cast<double>(src.height - 1));
                fx = std::min(std::max(fx, 0.0), static_cast<double>(src.width - 1));
                int y0 = static_cast<int>(fy), x0 = static_cast<int>(fx);
                int y1 = std::min(y0 + 1, src.height - 1);
                int x1 = std::min(x0 + 1, src.width - 1);
                double wy = fy - y0, wx = fx - x0;
                dst.at(c, y, x) = static_cast<float>(
                    src.at(c, y0, x0) * (1 - wx) * (1 - wy) + src.at(c, y0, x1) * wx * (1 - wy) +
                    src.at(c, y1, x0) * (1 - wx) * wy + src.at(c, y1, x1) * wx * wy);
            }
        }
    }
    return dst;
}

} // namespace

TEST_SUITE("image") {

TEST_CASE("ppm round trip preserves 8-bit values exactly")
{
    Image img(3, 2, 3);
    uint8_t v = 7;
    for (int y = 0; y < 2; ++y) {
        for (int x = 0; x < 3; ++x) {
            for (int c = 0; c < 3; ++c) {
                img.at(c, y, x) = (v += 13) / 255.0f;
            }
        }
    }
    std::string path = tmp_path("sssdet_img_rt.ppm");
    save_ppm(img, path);
    Image back = load_image(path);

    CHECK(back.width == 3);
    CHECK(back.height == 2);
    CHECK(back.channels == 3);
    CHECK(back.data == img.data);
    fs::remove(path);
}

TEST_CASE("ppm header comments and extra whitespace parse")
{
    std::string path = tmp_path("sssdet_img_hdr.ppm");
    write_bytes(path, "P6 # raster follows\n# a comment line\n 2\t1 # dims\n255\nabcdef");
    Image img = load_image(path);
    CHECK(img.width == 2);
    CHECK(img.height == 1);
    CHECK(img.at(0, 0, 0) == doctest::Approx('a' / 255.0f));
    CHECK(img.at(2, 0, 1) == doctest::Approx('f' / 255.0f));
    fs::remove(path);
}

TEST_CASE("malformed ppm inputs are rejected")
{
    std::string path = tmp_path("sssdet_img_bad.ppm");

    write_bytes(path, "P5\n2 2\n255\n1234");
    CHECK_THROWS_AS(load_image(path), DataError);

    write_bytes(path, "P6\n2 2\n65535\n12341234");
    CHECK_THROWS_WITH_AS(load_image(path), doctest::Contains("maxval"), DataError);

    write_bytes(path, "P6\n2 2\n255\nabc"); // 12 bytes needed
    CHECK_THROWS_WITH_AS(load_image(path), doctest::Contains("truncated"), DataError);

    write_bytes(path, "P6\nx 2\n255\n");
    CHECK_THROWS_WITH_AS(load_image(path), doctest::Contains("malformed"), DataError);

    fs::remove(path);
    CHECK_THROWS_AS(load_image(path), IoError);
}

TEST_CASE("resize to the same size is the identity")
{
    Rng rng(3);
    Image img(5, 4, 3);
    for (float& v : img.data) {
        v = rng.uniform(0.0f, 1.0f);
    }
    Image out = resize_bilinear(img, 5, 4);
    CHECK(out.data == img.data);
}

TEST_CASE("2x upscale of a 2x2 checkerboard matches hand interpolation")
{
    Image src(2, 2, 1);
    src.at(0, 0, 0) = 1.0f;
    src.at(0, 1, 1) = 1.0f;
    Image dst = resize_bilinear(src, 4, 4);

    // row 0 samples source row 0 only
    CHECK(dst.at(0, 0, 0) == doctest::Approx(1.0f));
    CHECK(dst.at(0, 0, 1) == doctest::Approx(0.75f));
    CHECK(dst.at(0, 0, 2) == doctest::Approx(0.25f));
    CHECK(dst.at(0, 0, 3) == doctest::Approx(0.0f));
    // interior blends four neighbours
    CHECK(dst.at(0, 1, 1) == doctest::Approx(0.625f));
    CHECK(dst.at(0, 2, 2) == doctest::Approx(0.625f));
    CHECK(dst.at(0, 1, 2) == doctest::Approx(0.375f));
    // corners pass through
    CHECK(dst.at(0, 3, 3) == doctest::Approx(1.0f));
    CHECK(dst.at(0, 3, 0) == doctest::Approx(0.0f));
}

TEST_CASE("constant image stays constant under any resize")
{
    Image src(19, 7, 3);
    for (float& v : src.data) {
        v = 0.381f;
    }
    const std::vector<std::pair<int, int>> sizes = {{3, 11}, {38, 14}, {19, 7}, {1, 1}};
    for (auto [w, h] : sizes) {
        Image out = resize_bilinear(src, w, h);
        for (float v : out.data) {
            CHECK(v == doctest::Approx(0.381f));
        }
    }
}

TEST_CASE("2x downscale averages each 2x2 block")
{
    Image src(4, 4, 1);
    float v = 0.0f;
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 4; ++x) {
            src.at(0, y, x) = (v += 0.05f);
        }
    }
    Image dst = resize_bilinear(src, 2, 2);
    for (int y = 0; y < 2; ++y) {
        for (int x = 0; x < 2; ++x) {
            float mean = (src.at(0, 2 * y, 2 * x) + src.at(0, 2 * y, 2 * x + 1) +
                          src.at(0, 2 * y + 1, 2 * x) + src.at(0, 2 * y + 1, 2 * x + 1)) /
                         4.0f;
            CHECK(dst.at(0, y, x) == doctest::Approx(mean));
        }
    }
}

TEST_CASE("resize agrees with an independent oracle on random shapes")
{
    Rng rng(17);
    for (int it = 0; it < 25; ++it) {
        int sw = 1 + rng.uniform_int(12), sh = 1 + rng.uniform_int(12);
        int dw = 1 + rng.uniform_int(12), dh = 1 + rng.uniform_int(12);
        Image src(sw, sh, 1 + rng.uniform_int(3));
        for (float& x : src.data) {
            x = rng.uniform(0.0f, 1.0f);
        }
        Image got = resize_bilinear(src, dw, dh);
        Image want = resize_oracle(src, dw, dh);
        REQUIRE(got.data.size() == want.data.size());
        for (size_t i = 0; i < got.data.size(); ++i) {
            REQUIRE(got.data[i] == doctest::Approx(want.data[i]).epsilon(1e-4));
        }
    }
}

TEST_CASE("crop copies the exact window and validates bounds")
{
    Image src(4, 3, 2);
    float v = 0.0f;
    for (float& x : src.data) {
        x = (v += 0.01f);
    }
    Image out = crop(src, 1, 1, 2, 2);
    CHECK(out.width == 2);
    CHECK(out.height == 2);
    for (int c = 0; c < 2; ++c) {
        for (int y = 0; y < 2; ++y) {
            for (int x = 0; x < 2; ++x) {
                CHECK(out.at(c, y, x) == src.at(c, y + 1, x + 1));
            }
        }
    }
    CHECK_THROWS_AS(crop(src, 3, 0, 2, 2), DataError);
    CHECK_THROWS_AS(crop(src, -1, 0, 2, 2), DataError);
}

TEST_CASE("tensor view round trips and keeps the planar layout")
{
    Image img(3, 2, 2);
    float v = 0.0f;
    for (float& x : img.data) {
        x = (v += 0.125f);
    }
    Tensor t = to_tensor(img);
    CHECK(t.shape() == Shape4{1, 2, 2, 3});
    for (int c = 0; c < 2; ++c) {
        for (int y = 0; y < 2; ++y) {
            for (int x = 0; x < 3; ++x) {
                CHECK(t.at(0, c, y, x) == img.at(c, y, x));
            }
        }
    }
    Image back = to_image(t);
    CHECK(back.data == img.data);
}

TEST_CASE("raw tensor file round trips and rejects corruption")
{
    Rng rng(5);
    Tensor t = random_tensor(2, 3, 4, 5, rng);
    std::string path = tmp_path("sssdet_img.ften");
    save_tensor(t, path);
    Tensor back = load_tensor(path);
    CHECK(back == t);

    // load_image picks up single-batch tensor files by magic
    Tensor one = random_tensor(1, 3, 4, 5, rng);
    save_tensor(one, path);
    Image img = load_image(path);
    CHECK(img.width == 5);
    CHECK(img.height == 4);
    CHECK(img.channels == 3);

    write_bytes(path, "FTXX0000000000000000....");
    CHECK_THROWS_WITH_AS(load_tensor(path), doctest::Contains("magic"), DataError);

    save_tensor(t, path);
    fs::resize_file(path, fs::file_size(path) - 8);
    CHECK_THROWS_WITH_AS(load_tensor(path), doctest::Contains("expected"), DataError);
    fs::remove(path);
}

TEST_CASE("load_and_resize composes load, stretch, tensor view")
{
    Image img(4, 4, 3);
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 4; ++x) {
            img.at(0, y, x) = x / 4.0f;
            img.at(1, y, x) = y / 4.0f;
            img.at(2, y, x) = 16.0f / 255.0f;
        }
    }
    std::string path = tmp_path("sssdet_img_lr.ppm");
    save_ppm(img, path);
    Tensor t = load_and_resize(path, 8, 8);
    CHECK(t.shape() == Shape4{1, 3, 8, 8});
    // blue plane is constant; survives quantization and stretch
    for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) {
            CHECK(t.at(0, 2, y, x) == doctest::Approx(16.0f / 255.0f));
        }
    }
    fs::remove(path);
}

} // TEST_SUITE
