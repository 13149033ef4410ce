#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "sssdet/image.hpp"
#include "sssdet/tile.hpp"

using namespace sssdet;

namespace {

namespace fs = std::filesystem;

GroundTruthBox make_truth(int class_id, float cx, float cy, float w, float h)
{
    GroundTruthBox g;
    g.class_id = class_id;
    g.cx = cx;
    g.cy = cy;
    g.w = w;
    g.h = h;
    return g;
}

// pixel-space corner box of a normalized label
Box pixel_box(const GroundTruthBox& g, int width, int height)
{
    Box b = g.box();
    return Box{b.x_min * width, b.y_min * height, b.x_max * width, b.y_max * height};
}

} // namespace

TEST_SUITE("tile") {

TEST_CASE("a 4x4 grid without overlap partitions the image exactly")
{
    TileSpec spec; // 4x4, overlap 0
    auto regions = tile_regions(400, 400, spec);
    REQUIRE(regions.size() == 16);
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            const TileRegion& t = regions[static_cast<size_t>(r * 4 + c)];
            CHECK(t.row == r);
            CHECK(t.col == c);
            CHECK(t.x == c * 100);
            CHECK(t.y == r * 100);
            CHECK(t.w == 100);
            CHECK(t.h == 100);
        }
    }

    // ragged division still covers every pixel exactly once
    auto ragged = tile_regions(401, 403, spec);
    std::vector<int> cover(401 * 403, 0);
    for (const auto& t : ragged) {
        for (int y = t.y; y < t.y + t.h; ++y) {
            for (int x = t.x; x < t.x + t.w; ++x) {
                ++cover[static_cast<size_t>(y * 401 + x)];
            }
        }
    }
    for (int v : cover) {
        REQUIRE(v == 1);
    }
}

TEST_CASE("overlap grows interior edges only and clamps at the border")
{
    TileSpec spec;
    spec.rows = 2;
    spec.cols = 2;
    spec.overlap = 8;
    auto regions = tile_regions(400, 400, spec);
    REQUIRE(regions.size() == 4);

    // top-left: grown right and down only
    CHECK(regions[0].x == 0);
    CHECK(regions[0].y == 0);
    CHECK(regions[0].w == 208);
    CHECK(regions[0].h == 208);

    // bottom-right: grown left and up only
    CHECK(regions[3].x == 192);
    CHECK(regions[3].y == 192);
    CHECK(regions[3].w == 208);
    CHECK(regions[3].h == 208);

    // an oversized overlap clamps to the image instead of escaping it
    spec.overlap = 1000;
    for (const auto& t : tile_regions(400, 400, spec)) {
        CHECK(t.x == 0);
        CHECK(t.y == 0);
        CHECK(t.w == 400);
        CHECK(t.h == 400);
    }
}

TEST_CASE("grids that do not fit are rejected")
{
    TileSpec spec; // 4x4
    CHECK_THROWS_WITH_AS(tile_regions(3, 10, spec), doctest::Contains("image too small"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(tile_regions(10, 3, spec), doctest::Contains("image too small"),
                         ConfigError);
    spec.rows = 0;
    CHECK_THROWS_AS(tile_regions(100, 100, spec), ConfigError);
    spec.rows = 2;
    spec.retained_fraction = 0.0f;
    CHECK_THROWS_AS(tile_regions(100, 100, spec), ConfigError);
}

TEST_CASE("a box wholly inside one tile lands in that tile, same pixel size")
{
    TileSpec spec; // 4x4 over 400x400: tiles are 100x100
    auto regions = tile_regions(400, 400, spec);

    // pixel box (120, 130)-(160, 170) sits inside tile row 1, col 1
    GroundTruthBox g = make_truth(2, 0.35f, 0.375f, 0.1f, 0.1f);
    int holders = 0;
    for (const auto& t : regions) {
        auto kept = remap_to_tile({g}, t, 400, 400, spec.retained_fraction);
        if (kept.empty()) {
            continue;
        }
        ++holders;
        REQUIRE(kept.size() == 1);
        CHECK(kept[0].class_id == 2);
        CHECK(kept[0].cx == doctest::Approx(0.4f));
        CHECK(kept[0].cy == doctest::Approx(0.5f));
        CHECK(kept[0].w == doctest::Approx(0.4f));  // 40 px of a 100 px tile
        CHECK(kept[0].h == doctest::Approx(0.4f));
        CHECK(t.row == 1);
        CHECK(t.col == 1);
    }
    CHECK(holders == 1);
}

TEST_CASE("the retained fraction decides split boxes")
{
    TileSpec spec;
    spec.rows = 1;
    spec.cols = 2;
    spec.retained_fraction = 0.3f;
    auto regions = tile_regions(200, 100, spec);
    REQUIRE(regions.size() == 2);

    // straddles the seam 50/50: both halves keep it
    GroundTruthBox even = make_truth(0, 0.5f, 0.5f, 0.2f, 0.4f);
    CHECK(remap_to_tile({even}, regions[0], 200, 100, spec.retained_fraction).size() == 1);
    CHECK(remap_to_tile({even}, regions[1], 200, 100, spec.retained_fraction).size() == 1);

    // 80/20 split: the 20% side is below the 0.3 cut and drops it
    GroundTruthBox lopsided = make_truth(0, 0.44f, 0.5f, 0.2f, 0.4f);
    CHECK(remap_to_tile({lopsided}, regions[0], 200, 100, spec.retained_fraction).size() == 1);
    CHECK(remap_to_tile({lopsided}, regions[1], 200, 100, spec.retained_fraction).empty());

    // 60/40: both sides clear the cut
    GroundTruthBox at_cut = make_truth(0, 0.48f, 0.5f, 0.2f, 0.4f);
    CHECK(remap_to_tile({at_cut}, regions[0], 200, 100, spec.retained_fraction).size() == 1);
    CHECK(remap_to_tile({at_cut}, regions[1], 200, 100, spec.retained_fraction).size() == 1);

    // a box outside the tile disappears entirely
    GroundTruthBox far_left = make_truth(0, 0.1f, 0.5f, 0.1f, 0.1f);
    CHECK(remap_to_tile({far_left}, regions[1], 200, 100, spec.retained_fraction).empty());
}

TEST_CASE("merging a tile box back recovers the clipped original within a pixel")
{
    Rng rng(31);
    const int W = 640;
    const int H = 480;
    TileSpec spec;
    spec.overlap = 12;
    auto regions = tile_regions(W, H, spec);

    for (int trial = 0; trial < 60; ++trial) {
        GroundTruthBox g = make_truth(rng.uniform_int(3), rng.uniform(0.1f, 0.9f),
                                      rng.uniform(0.1f, 0.9f), rng.uniform(0.05f, 0.3f),
                                      rng.uniform(0.05f, 0.3f));
        for (const auto& t : regions) {
            for (const auto& kept : remap_to_tile({g}, t, W, H, spec.retained_fraction)) {
                GroundTruthBox back = merge_from_tile(kept, t, W, H);
                CHECK(back.class_id == g.class_id);

                // the merged box equals the original clipped to the tile rect
                Box orig = pixel_box(g, W, H);
                Box clipped{std::max(orig.x_min, static_cast<float>(t.x)),
                            std::max(orig.y_min, static_cast<float>(t.y)),
                            std::min(orig.x_max, static_cast<float>(t.x + t.w)),
                            std::min(orig.y_max, static_cast<float>(t.y + t.h))};
                Box merged = pixel_box(back, W, H);
                CHECK(std::fabs(merged.x_min - clipped.x_min) <= 1.0f);
                CHECK(std::fabs(merged.y_min - clipped.y_min) <= 1.0f);
                CHECK(std::fabs(merged.x_max - clipped.x_max) <= 1.0f);
                CHECK(std::fabs(merged.y_max - clipped.y_max) <= 1.0f);
            }
        }
    }
}

TEST_CASE("tiling an image file writes crops and remapped labels")
{
    fs::path dir = fs::temp_directory_path() / "sssdet_tile_files";
    fs::create_directories(dir);

    Image img(64, 64, 3);
    Rng rng(7);
    for (float& v : img.data) {
        v = rng.uniform(0.0f, 1.0f);
    }
    const std::string image_path = (dir / "scene.ppm").string();
    save_ppm(img, image_path);

    // one box inside tile (0, 0), one straddling near the bottom-right seam
    std::vector<GroundTruthBox> truths{
        make_truth(0, 0.125f, 0.125f, 0.12f, 0.12f),
        make_truth(1, 0.8f, 0.8f, 0.15f, 0.15f),
    };
    save_labels(label_path_for(image_path), truths);

    TileSpec spec; // 4x4: 16x16 tiles
    fs::path out = dir / "tiles";
    auto outputs = tile_image_file(image_path, label_path_for(image_path), out.string(), spec);
    REQUIRE(outputs.size() == 16);

    Image reloaded_src = load_image(image_path); // quantized reference
    auto regions = tile_regions(64, 64, spec);
    int total_boxes = 0;
    for (size_t i = 0; i < outputs.size(); ++i) {
        const TileOutput& o = outputs[i];
        const TileRegion& t = regions[i];
        std::string suffix = "_r" + std::to_string(t.row) + "c" + std::to_string(t.col);
        CHECK(o.image_path.find(suffix + ".ppm") != std::string::npos);
        CHECK(o.label_path.find(suffix + ".txt") != std::string::npos);

        // the written crop equals cropping the quantized source
        Image tile_img = load_image(o.image_path);
        Image expect = crop(reloaded_src, t.x, t.y, t.w, t.h);
        REQUIRE(tile_img.width == expect.width);
        REQUIRE(tile_img.height == expect.height);
        CHECK(tile_img.data == expect.data);

        // the written labels equal remapping directly
        auto expect_boxes = remap_to_tile(truths, t, 64, 64, spec.retained_fraction);
        auto got = load_labels(o.label_path);
        REQUIRE(got.size() == expect_boxes.size());
        CHECK(o.box_count == static_cast<int>(got.size()));
        for (size_t b = 0; b < got.size(); ++b) {
            CHECK(got[b].class_id == expect_boxes[b].class_id);
            CHECK(got[b].cx == doctest::Approx(expect_boxes[b].cx).epsilon(1e-5));
            CHECK(got[b].w == doctest::Approx(expect_boxes[b].w).epsilon(1e-5));
        }
        total_boxes += o.box_count;
    }
    CHECK(total_boxes >= 2); // both labels survive somewhere
}

} // TEST_SUITE
