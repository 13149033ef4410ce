#include "sssdet/weights.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>

namespace sssdet {

static_assert(std::endian::native == std::endian::little,
              "weights files are little-endian; this build targets little-endian hosts");

namespace {

constexpr int32_t kMajor = 0;
constexpr int32_t kMinor = 2;
constexpr int32_t kRevision = 0;
constexpr int64_t kHeaderBytes = 20;

int64_t weight_count(const ConvParams& c)
{
    return static_cast<int64_t>(c.kernel) * c.kernel * c.in_channels * c.out_channels;
}

void write_floats(std::ofstream& ofs, const float* data, int64_t n)
{
    ofs.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n) * 4);
}

void read_floats(std::ifstream& ifs, float* data, int64_t n)
{
    ifs.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n) * 4);
}

} // namespace

int64_t NetParams::float_count() const
{
    int64_t total = 0;
    for (const ConvBlock& b : blocks) {
        total += weight_count(b.conv);
        if (b.bn) {
            total += 4LL * b.conv.out_channels;
        }
    }
    return total;
}

NetParams make_params(const NetworkDef& def)
{
    NetParams params;
    for (size_t i = 0; i < def.layers.size(); ++i) {
        const LayerSpec& l = def.layers[i];
        if (l.kind != LayerKind::Convolutional) {
            continue;
        }
        ConvBlock block;
        block.conv.kernel = l.kernel;
        block.conv.in_channels = def.layer_input_shape(i).c;
        block.conv.out_channels = l.filters;
        block.conv.name = strcat_msg("conv_", i);
        block.conv.weights = Tensor(l.filters, block.conv.in_channels, l.kernel, l.kernel);
        if (l.batch_normalize) {
            block.bn = BatchNormParams::identity(l.filters);
        }
        params.blocks.push_back(std::move(block));
    }
    return params;
}

NetParams init_weights(const NetworkDef& def, uint64_t seed)
{
    NetParams params = make_params(def);
    Rng rng(seed);
    for (ConvBlock& b : params.blocks) {
        float fan_in = static_cast<float>(b.conv.kernel) * b.conv.kernel * b.conv.in_channels;
        float a = std::sqrt(2.0f / fan_in);
        float* w = b.conv.weights.data();
        for (int64_t i = 0; i < b.conv.weights.count(); ++i) {
            w[i] = rng.uniform(-a, a);
        }
    }
    return params;
}

int64_t save_weights(const NetworkDef& def, const NetParams& params, const std::string& path)
{
    if (params.blocks.size() != static_cast<size_t>(def.conv_count())) {
        throw ConfigError(strcat_msg("weights hold ", params.blocks.size(),
                                     " conv blocks, config defines ", def.conv_count()));
    }
    NetParams expected = make_params(def);
    for (size_t i = 0; i < params.blocks.size(); ++i) {
        const ConvBlock& got = params.blocks[i];
        const ConvBlock& want = expected.blocks[i];
        if (got.conv.weights.shape() != want.conv.weights.shape() ||
            got.bn.has_value() != want.bn.has_value()) {
            throw ConfigError(strcat_msg(want.conv.name, ": parameter block does not match config"));
        }
    }

    std::ofstream ofs(path, std::ios::binary | std::ios::trunc);
    if (!ofs) {
        throw IoError("cannot open weights file for writing: " + path);
    }
    int32_t header[3] = {kMajor, kMinor, kRevision};
    ofs.write(reinterpret_cast<const char*>(header), 12);
    int64_t seen = params.seen;
    ofs.write(reinterpret_cast<const char*>(&seen), 8);

    for (const ConvBlock& b : params.blocks) {
        int64_t c = b.conv.out_channels;
        if (b.bn) {
            write_floats(ofs, b.bn->beta.data(), c);
            write_floats(ofs, b.bn->gamma.data(), c);
            write_floats(ofs, b.bn->rolling_mean.data(), c);
            write_floats(ofs, b.bn->rolling_var.data(), c);
        }
        write_floats(ofs, b.conv.weights.data(), weight_count(b.conv));
    }
    ofs.flush();
    if (!ofs) {
        throw IoError("write failed: " + path);
    }
    return kHeaderBytes + 4 * params.float_count();
}

NetParams load_weights(const NetworkDef& def, const std::string& path)
{
    NetParams params = make_params(def);
    int64_t expected = kHeaderBytes + 4 * params.float_count();

    std::ifstream ifs(path, std::ios::binary | std::ios::ate);
    if (!ifs) {
        throw IoError("cannot open weights file: " + path);
    }
    int64_t actual = static_cast<int64_t>(ifs.tellg());
    ifs.seekg(0);
    if (actual < kHeaderBytes) {
        throw IoError(strcat_msg(path, ": ", actual, " bytes is too short for the ", kHeaderBytes,
                                 "-byte header"));
    }
    if (actual != expected) {
        throw IoError(strcat_msg(path, ": expected ", expected, " bytes for this config, found ",
                                 actual, (actual < expected ? " (truncated)" : " (surplus bytes)")));
    }

    int32_t header[3] = {0, 0, 0};
    ifs.read(reinterpret_cast<char*>(header), 12);
    int64_t seen = 0;
    ifs.read(reinterpret_cast<char*>(&seen), 8);
    if (header[0] != kMajor || header[1] != kMinor) {
        std::cerr << "warning: weights version " << header[0] << "." << header[1]
                  << " (expected " << kMajor << "." << kMinor
                  << "), loading with the current layout\n";
    }
    params.seen = seen;

    for (ConvBlock& b : params.blocks) {
        int64_t c = b.conv.out_channels;
        if (b.bn) {
            read_floats(ifs, b.bn->beta.data(), c);
            read_floats(ifs, b.bn->gamma.data(), c);
            read_floats(ifs, b.bn->rolling_mean.data(), c);
            read_floats(ifs, b.bn->rolling_var.data(), c);
        }
        read_floats(ifs, b.conv.weights.data(), weight_count(b.conv));
        if (!ifs) {
            throw IoError(strcat_msg(path, ": read failed inside block ", b.conv.name));
        }
    }
    return params;
}

} // namespace sssdet
