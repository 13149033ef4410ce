#include "sssdet/network.hpp"

namespace sssdet {

namespace {

void check_input(const NetworkDef& def, const Tensor& input)
{
    const Shape4& s = input.shape();
    if (s.c != def.input_c || s.h != def.input_h || s.w != def.input_w) {
        throw ConfigError(strcat_msg("network input must be ", def.input_c, "x", def.input_h,
                                     "x", def.input_w, ", got ", s.c, "x", s.h, "x", s.w));
    }
}

// conv blocks appear in layer order; map layer index -> block index
std::vector<int> block_indices(const NetworkDef& def)
{
    std::vector<int> map(def.layers.size(), -1);
    int next = 0;
    for (size_t i = 0; i < def.layers.size(); ++i) {
        if (def.layers[i].kind == LayerKind::Convolutional) {
            map[i] = next++;
        }
    }
    return map;
}

} // namespace

void NetGrads::accumulate(const NetGrads& other)
{
    for (size_t b = 0; b < weights.size(); ++b) {
        for (int64_t i = 0; i < weights[b].count(); ++i) {
            weights[b].data()[i] += other.weights[b].data()[i];
        }
        for (size_t c = 0; c < gamma[b].size(); ++c) {
            gamma[b][c] += other.gamma[b][c];
            beta[b][c] += other.beta[b][c];
        }
    }
}

void NetGrads::scale(float factor)
{
    for (size_t b = 0; b < weights.size(); ++b) {
        for (int64_t i = 0; i < weights[b].count(); ++i) {
            weights[b].data()[i] *= factor;
        }
        for (size_t c = 0; c < gamma[b].size(); ++c) {
            gamma[b][c] *= factor;
            beta[b][c] *= factor;
        }
    }
}

NetGrads make_grads(const NetParams& params)
{
    NetGrads grads;
    for (const ConvBlock& block : params.blocks) {
        grads.weights.emplace_back(block.conv.weights.shape());
        size_t c = block.bn ? static_cast<size_t>(block.conv.out_channels) : 0;
        grads.gamma.emplace_back(c, 0.0f);
        grads.beta.emplace_back(c, 0.0f);
    }
    return grads;
}

Tensor forward_infer(const NetworkDef& def, const NetParams& params, const Tensor& input)
{
    check_input(def, input);
    std::vector<int> blocks = block_indices(def);
    Tensor x = input;
    for (size_t i = 0; i < def.layers.size(); ++i) {
        const LayerSpec& layer = def.layers[i];
        switch (layer.kind) {
        case LayerKind::Convolutional: {
            const ConvBlock& block = params.blocks[static_cast<size_t>(blocks[i])];
            x = conv2d_forward(x, block.conv);
            if (block.bn) {
                x = batchnorm_forward(x, *block.bn);
            }
            if (layer.activation == Activation::Leaky) {
                x = leaky_relu(x);
            }
            break;
        }
        case LayerKind::Maxpool: {
            std::vector<int32_t> argmax;
            x = maxpool2x2_forward(x, argmax, strcat_msg("maxpool_", i));
            break;
        }
        case LayerKind::Region:
            break; // the head tensor is the prediction
        }
    }
    return x;
}

Tensor forward_train(const NetworkDef& def, NetParams& params, const Tensor& input,
                     ForwardTrace& trace)
{
    check_input(def, input);
    std::vector<int> blocks = block_indices(def);
    const size_t n = def.layers.size();
    trace.acts.assign(n + 1, Tensor());
    trace.pre_act.assign(n, Tensor());
    trace.bn_cache.assign(n, BnCache());
    trace.argmax.assign(n, {});

    trace.acts[0] = input;
    for (size_t i = 0; i < n; ++i) {
        const LayerSpec& layer = def.layers[i];
        const Tensor& x = trace.acts[i];
        switch (layer.kind) {
        case LayerKind::Convolutional: {
            ConvBlock& block = params.blocks[static_cast<size_t>(blocks[i])];
            Tensor y = conv2d_forward(x, block.conv);
            if (block.bn) {
                y = batchnorm_forward(y, *block.bn, BnMode::Train, &trace.bn_cache[i]);
            }
            if (layer.activation == Activation::Leaky) {
                trace.pre_act[i] = y;
                y = leaky_relu(y);
            }
            trace.acts[i + 1] = std::move(y);
            break;
        }
        case LayerKind::Maxpool:
            trace.acts[i + 1] = maxpool2x2_forward(x, trace.argmax[i], strcat_msg("maxpool_", i));
            break;
        case LayerKind::Region:
            trace.acts[i + 1] = x;
            break;
        }
    }
    return trace.acts[n];
}

NetGrads backward(const NetworkDef& def, const NetParams& params, const ForwardTrace& trace,
                  const Tensor& grad_head, Tensor* grad_input)
{
    if (trace.acts.size() != def.layers.size() + 1) {
        throw ConfigError("backward needs the trace of a train-mode forward");
    }
    NetGrads grads = make_grads(params);
    std::vector<int> blocks = block_indices(def);

    Tensor grad = grad_head;
    for (int i = static_cast<int>(def.layers.size()) - 1; i >= 0; --i) {
        const LayerSpec& layer = def.layers[static_cast<size_t>(i)];
        switch (layer.kind) {
        case LayerKind::Convolutional: {
            size_t b = static_cast<size_t>(blocks[static_cast<size_t>(i)]);
            const ConvBlock& block = params.blocks[b];
            if (layer.activation == Activation::Leaky) {
                grad = leaky_relu_backward(trace.pre_act[static_cast<size_t>(i)], grad);
            }
            if (block.bn) {
                grad = batchnorm_backward(grad, *block.bn, trace.bn_cache[static_cast<size_t>(i)],
                                          grads.gamma[b], grads.beta[b]);
            }
            Tensor grad_in;
            conv2d_backward(trace.acts[static_cast<size_t>(i)], block.conv, grad, grad_in,
                            grads.weights[b]);
            grad = std::move(grad_in);
            break;
        }
        case LayerKind::Maxpool:
            grad = maxpool2x2_backward(grad, trace.argmax[static_cast<size_t>(i)],
                                       trace.acts[static_cast<size_t>(i)].shape());
            break;
        case LayerKind::Region:
            break; // identity
        }
    }
    if (grad_input) {
        *grad_input = std::move(grad);
    }
    return grads;
}

} // namespace sssdet
