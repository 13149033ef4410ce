#include "sssdet/tile.hpp"

#include <algorithm>
#include <filesystem>

#include "sssdet/boxes.hpp"

namespace sssdet {

namespace {

namespace fs = std::filesystem;

void check_spec(const TileSpec& spec)
{
    if (spec.rows < 1 || spec.cols < 1) {
        throw ConfigError(strcat_msg("tile grid must be at least 1x1, got ", spec.rows, "x",
                                     spec.cols));
    }
    if (spec.overlap < 0) {
        throw ConfigError(strcat_msg("tile overlap must be >= 0, got ", spec.overlap));
    }
    if (!(spec.retained_fraction > 0.0f) || spec.retained_fraction > 1.0f) {
        throw ConfigError(strcat_msg("retained fraction must lie in (0, 1], got ",
                                     spec.retained_fraction));
    }
}

} // namespace

std::vector<TileRegion> tile_regions(int width, int height, const TileSpec& spec)
{
    check_spec(spec);
    if (width < spec.cols || height < spec.rows) {
        throw ConfigError(strcat_msg("image too small for grid: ", width, "x", height,
                                     " cannot be split ", spec.rows, "x", spec.cols));
    }
    std::vector<TileRegion> regions;
    regions.reserve(static_cast<size_t>(spec.rows) * spec.cols);
    for (int r = 0; r < spec.rows; ++r) {
        // floor boundaries partition the image exactly
        const int y0 = static_cast<int>(static_cast<int64_t>(height) * r / spec.rows);
        const int y1 = static_cast<int>(static_cast<int64_t>(height) * (r + 1) / spec.rows);
        for (int c = 0; c < spec.cols; ++c) {
            const int x0 = static_cast<int>(static_cast<int64_t>(width) * c / spec.cols);
            const int x1 = static_cast<int>(static_cast<int64_t>(width) * (c + 1) / spec.cols);
            TileRegion region;
            region.x = std::max(0, x0 - (c > 0 ? spec.overlap : 0));
            region.y = std::max(0, y0 - (r > 0 ? spec.overlap : 0));
            const int xe = std::min(width, x1 + (c + 1 < spec.cols ? spec.overlap : 0));
            const int ye = std::min(height, y1 + (r + 1 < spec.rows ? spec.overlap : 0));
            region.w = xe - region.x;
            region.h = ye - region.y;
            region.row = r;
            region.col = c;
            regions.push_back(region);
        }
    }
    return regions;
}

std::vector<GroundTruthBox> remap_to_tile(const std::vector<GroundTruthBox>& truths,
                                          const TileRegion& region, int width, int height,
                                          float retained_fraction)
{
    std::vector<GroundTruthBox> out;
    const Box tile{static_cast<float>(region.x), static_cast<float>(region.y),
                   static_cast<float>(region.x + region.w),
                   static_cast<float>(region.y + region.h)};
    for (const GroundTruthBox& t : truths) {
        // source pixels
        Box b = box_from_center(t.cx * width, t.cy * height, t.w * width, t.h * height);
        const float original = b.area();
        Box clipped{std::max(b.x_min, tile.x_min), std::max(b.y_min, tile.y_min),
                    std::min(b.x_max, tile.x_max), std::min(b.y_max, tile.y_max)};
        if (clipped.x_max <= clipped.x_min || clipped.y_max <= clipped.y_min) {
            continue;
        }
        if (clipped.area() < retained_fraction * original) {
            continue;
        }
        GroundTruthBox kept;
        kept.class_id = t.class_id;
        kept.cx = (0.5f * (clipped.x_min + clipped.x_max) - region.x) / region.w;
        kept.cy = (0.5f * (clipped.y_min + clipped.y_max) - region.y) / region.h;
        kept.w = clipped.width() / region.w;
        kept.h = clipped.height() / region.h;
        out.push_back(kept);
    }
    return out;
}

GroundTruthBox merge_from_tile(const GroundTruthBox& tile_box, const TileRegion& region,
                               int width, int height)
{
    GroundTruthBox out;
    out.class_id = tile_box.class_id;
    out.cx = (region.x + tile_box.cx * region.w) / width;
    out.cy = (region.y + tile_box.cy * region.h) / height;
    out.w = tile_box.w * region.w / width;
    out.h = tile_box.h * region.h / height;
    return out;
}

std::vector<TileOutput> tile_image_file(const std::string& image_path,
                                        const std::string& label_path,
                                        const std::string& out_dir, const TileSpec& spec)
{
    const Image src = load_image(image_path);
    const std::vector<GroundTruthBox> truths = load_labels(label_path);
    const std::vector<TileRegion> regions = tile_regions(src.width, src.height, spec);

    fs::create_directories(out_dir);
    const std::string stem = fs::path(image_path).stem().string();

    std::vector<TileOutput> outputs;
    outputs.reserve(regions.size());
    for (const TileRegion& region : regions) {
        const Image piece = crop(src, region.x, region.y, region.w, region.h);
        const std::vector<GroundTruthBox> boxes =
            remap_to_tile(truths, region, src.width, src.height, spec.retained_fraction);

        TileOutput out;
        out.region = region;
        out.box_count = static_cast<int>(boxes.size());
        const std::string base = strcat_msg(stem, "_r", region.row, "c", region.col);
        out.image_path = (fs::path(out_dir) / (base + ".ppm")).string();
        out.label_path = (fs::path(out_dir) / (base + ".txt")).string();
        save_ppm(piece, out.image_path);
        save_labels(out.label_path, boxes);
        outputs.push_back(std::move(out));
    }
    return outputs;
}

} // namespace sssdet
