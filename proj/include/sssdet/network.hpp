#ifndef SSSDET_NETWORK_HPP
#define SSSDET_NETWORK_HPP

#include <vector>

#include "sssdet/netdef.hpp"
#include "sssdet/weights.hpp"

namespace sssdet {

// Per-layer state captured by a train-mode forward, consumed by backward.
// All vectors are indexed by layer; entries unused by a layer kind stay empty.
struct ForwardTrace {
    std::vector<Tensor> acts;     // acts[0] = net input, acts[i + 1] = layer i output
    std::vector<Tensor> pre_act;  // convs: tensor entering the activation
    std::vector<BnCache> bn_cache;
    std::vector<std::vector<int32_t>> argmax; // maxpools
};

// Gradients shaped like NetParams, one entry per conv block.
struct NetGrads {
    std::vector<Tensor> weights;
    std::vector<std::vector<float>> gamma;
    std::vector<std::vector<float>> beta;

    void accumulate(const NetGrads& other);
    void scale(float factor);
};

NetGrads make_grads(const NetParams& params);

// Batchnorm uses rolling statistics; nothing is recorded. The region layer
// passes the head tensor through unchanged.
Tensor forward_infer(const NetworkDef& def, const NetParams& params, const Tensor& input);

// Batchnorm normalizes with batch statistics and advances the rolling EMA
// in params; every layer's activations are recorded in trace.
Tensor forward_train(const NetworkDef& def, NetParams& params, const Tensor& input,
                     ForwardTrace& trace);

// grad_head is the loss gradient w.r.t. the network output. Returns
// parameter gradients; if grad_input is non-null it receives the gradient
// w.r.t. the network input.
NetGrads backward(const NetworkDef& def, const NetParams& params, const ForwardTrace& trace,
                  const Tensor& grad_head, Tensor* grad_input = nullptr);

} // namespace sssdet

#endif
