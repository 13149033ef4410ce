#ifndef SSSDET_NETDEF_HPP
#define SSSDET_NETDEF_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "sssdet/common.hpp"

namespace sssdet {

enum class LayerKind { Convolutional, Maxpool, Region };
enum class Activation { Leaky, Linear };

// prior box shape in grid-cell units
struct Anchor {
    float w = 0.0f;
    float h = 0.0f;
};

struct LayerSpec {
    LayerKind kind = LayerKind::Convolutional;
    int cfg_line = 0; // section header line in the config

    // convolutional
    int kernel = 3;
    int filters = 0;
    bool batch_normalize = false;
    Activation activation = Activation::Leaky;

    // region
    int num_anchors = 0;
    int classes = 0;
    std::vector<Anchor> anchors;
};

struct ShapeCHW {
    int c = 0;
    int h = 0;
    int w = 0;
    bool operator==(const ShapeCHW&) const = default;
};

// Parsed and validated network: ordered layers plus inferred shapes and
// per-layer parameter/FLOP counts.
struct NetworkDef {
    int input_w = 0;
    int input_h = 0;
    int input_c = 0;

    std::vector<LayerSpec> layers;
    std::vector<ShapeCHW> out_shapes;
    std::vector<int64_t> layer_params;
    std::vector<int64_t> layer_flops;

    ShapeCHW input_shape() const { return {input_c, input_h, input_w}; }
    ShapeCHW layer_input_shape(size_t i) const
    {
        return i == 0 ? input_shape() : out_shapes[i - 1];
    }

    bool has_region() const
    {
        return !layers.empty() && layers.back().kind == LayerKind::Region;
    }
    const LayerSpec& region() const;

    // head grid size (square output maps)
    int grid_size() const;

    int64_t total_params() const;
    int64_t total_flops() const;
    int conv_count() const;
    int maxpool_count() const;
};

// INI-like darknet-style document: a [net] section followed by
// [convolutional] / [maxpool] / [region] sections, key=value lines,
// '#' comments. Unknown sections or keys are rejected with line numbers.
NetworkDef parse_config(const std::string& text);
NetworkDef load_config(const std::string& path);

struct ComplexityRow {
    int index = 0;
    std::string kind;
    std::string detail; // e.g. "3x3/16" for convs
    ShapeCHW in;
    ShapeCHW out;
    int64_t params = 0;
    int64_t flops = 0;
};

struct ComplexityReport {
    std::vector<ComplexityRow> rows;
    int64_t total_params = 0;
    int64_t total_flops = 0;
    int64_t model_size_bytes = 0; // saved weights file size

    double bflops() const { return static_cast<double>(total_flops) / 1e9; }
    double params_millions() const { return static_cast<double>(total_params) / 1e6; }
    double model_size_mb() const { return static_cast<double>(model_size_bytes) / 1e6; }
};

// Per-layer and total parameter / FLOP / model-size accounting. Convs count
// k^2*Cin*Cout weights (no bias) plus 4*Cout batchnorm stats, and
// 2*k^2*Cin*Cout*Hout*Wout FLOPs (multiply-add = 2). Pooling, activations
// and the region layer count as zero.
ComplexityReport account(const NetworkDef& def);

// human-readable per-layer table with a totals footer; deterministic
std::string summarize(const NetworkDef& def);
std::string summarize_csv(const NetworkDef& def);

} // namespace sssdet

#endif
