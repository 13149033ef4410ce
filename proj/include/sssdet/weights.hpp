#ifndef SSSDET_WEIGHTS_HPP
#define SSSDET_WEIGHTS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sssdet/netdef.hpp"
#include "sssdet/ops.hpp"

namespace sssdet {

// learnable state of one [convolutional] layer
struct ConvBlock {
    ConvParams conv;
    std::optional<BatchNormParams> bn;
};

// All learnable state of a network: one block per conv layer, in order.
struct NetParams {
    int64_t seen = 0; // images consumed by training
    std::vector<ConvBlock> blocks;

    int64_t float_count() const;
};

// zero weights, identity batchnorm, shapes taken from def
NetParams make_params(const NetworkDef& def);

// Conv weights uniform on (-a, a) with a = sqrt(2 / (k^2 * Cin)), batchnorm
// at identity. Deterministic per seed.
NetParams init_weights(const NetworkDef& def, uint64_t seed);

// Binary layout: int32 major=0, minor=2, revision=0 and int64 seen (all
// little-endian), then per conv block beta, gamma, rolling_mean, rolling_var
// (batch-normalized layers only) followed by the conv weights, as float32
// little-endian. File size is always 20 + 4 * float_count() bytes.
// Returns bytes written.
int64_t save_weights(const NetworkDef& def, const NetParams& params, const std::string& path);

// Exact inverse of save_weights. Truncated or oversized files are rejected;
// an unexpected header version warns and loads best-effort.
NetParams load_weights(const NetworkDef& def, const std::string& path);

} // namespace sssdet

#endif
