#ifndef SSSDET_OPS_HPP
#define SSSDET_OPS_HPP

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "sssdet/tensor.hpp"

namespace sssdet {

// 3x3 or 1x1 convolution, stride 1, zero same-padding, no bias.
struct ConvParams {
    int kernel = 3;
    int in_channels = 0;
    int out_channels = 0;
    Tensor weights; // (out_channels, in_channels, kernel, kernel)
    std::string name = "conv";

    int padding() const { return kernel / 2; }
};

struct BatchNormParams {
    std::vector<float> gamma;        // scale
    std::vector<float> beta;         // shift
    std::vector<float> rolling_mean;
    std::vector<float> rolling_var;
    float epsilon = 1e-5f;
    float momentum = 0.99f; // rolling-stat EMA keep factor

    static BatchNormParams identity(int channels, float eps = 1e-5f)
    {
        BatchNormParams p;
        p.gamma.assign(static_cast<size_t>(channels), 1.0f);
        p.beta.assign(static_cast<size_t>(channels), 0.0f);
        p.rolling_mean.assign(static_cast<size_t>(channels), 0.0f);
        p.rolling_var.assign(static_cast<size_t>(channels), 1.0f);
        p.epsilon = eps;
        return p;
    }
};

enum class BnMode { Infer, Train };

// Batch statistics captured by a train-mode forward, consumed by backward.
struct BnCache {
    std::vector<float> mean;
    std::vector<float> var; // biased, over (batch, h, w)
    Tensor xhat;
};

Tensor conv2d_forward(const Tensor& input, const ConvParams& params);

void conv2d_backward(const Tensor& input, const ConvParams& params, const Tensor& grad_out,
                     Tensor& grad_input, Tensor& grad_weights);

// Train mode normalizes with batch statistics and advances the rolling
// mean/var EMA in params. cache is required in train mode.
Tensor batchnorm_forward(const Tensor& input, BatchNormParams& params, BnMode mode,
                         BnCache* cache = nullptr);

// infer-mode normalization with the stored rolling statistics
Tensor batchnorm_forward(const Tensor& input, const BatchNormParams& params);

Tensor batchnorm_backward(const Tensor& grad_out, const BatchNormParams& params,
                          const BnCache& cache, std::vector<float>& grad_gamma,
                          std::vector<float>& grad_beta);

Tensor leaky_relu(const Tensor& input, float slope = 0.1f);

// gradient at exactly 0 is slope
Tensor leaky_relu_backward(const Tensor& input, const Tensor& grad_out, float slope = 0.1f);

// Non-overlapping 2x2 max pooling. argmax receives the flat input index of
// each window maximum; ties go to the first element in row-major order.
Tensor maxpool2x2_forward(const Tensor& input, std::vector<int32_t>& argmax,
                          const std::string& name = "maxpool");

Tensor maxpool2x2_backward(const Tensor& grad_out, const std::vector<int32_t>& argmax,
                           const Shape4& input_shape);

inline float sigmoid(float x)
{
    return 1.0f / (1.0f + std::exp(-x));
}

// logistic'(x) expressed through the forward value
inline float sigmoid_grad_from_output(float y)
{
    return y * (1.0f - y);
}

// Max-subtracted for stability; output sums to 1.
void softmax(std::span<const float> logits, std::span<float> out);

} // namespace sssdet

#endif
