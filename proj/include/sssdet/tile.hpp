#pragma once

// Grid tiling of large images with label remapping.
//
// Source labels are normalized to the source image; tile labels are
// normalized to their tile. A box is kept in a tile when the clipped
// area is at least retained_fraction of the original area.

#include <string>
#include <vector>

#include "sssdet/image.hpp"
#include "sssdet/labels.hpp"

namespace sssdet {

struct TileSpec {
    int rows = 4;
    int cols = 4;
    int overlap = 0; // pixels added on each interior edge
    float retained_fraction = 0.3f;
};

// pixel rectangle of one tile within the source image
struct TileRegion {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;
    int row = 0;
    int col = 0;
};

// Partitions width x height into spec.rows x spec.cols rectangles, each
// grown by spec.overlap pixels on interior edges and clamped to the image.
// Throws ConfigError when the grid does not fit.
std::vector<TileRegion> tile_regions(int width, int height, const TileSpec& spec);

// Boxes from `truths` (normalized to width x height) that survive clipping
// into `region`, renormalized to the tile.
std::vector<GroundTruthBox> remap_to_tile(const std::vector<GroundTruthBox>& truths,
                                          const TileRegion& region, int width, int height,
                                          float retained_fraction);

// Inverse coordinate map: a tile-normalized box back to source-normalized.
GroundTruthBox merge_from_tile(const GroundTruthBox& tile_box, const TileRegion& region,
                               int width, int height);

struct TileOutput {
    std::string image_path;
    std::string label_path;
    TileRegion region;
    int box_count = 0;
};

// Crops the image per tile_regions and writes <stem>_r<row>c<col>.ppm plus a
// matching .txt label file into out_dir (created if missing).
std::vector<TileOutput> tile_image_file(const std::string& image_path,
                                        const std::string& label_path,
                                        const std::string& out_dir, const TileSpec& spec);

} // namespace sssdet
