#include "sssdet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

namespace sssdet {

namespace {

// cols has one row per (channel, ky, kx) of length H*W, so the convolution
// becomes a plain matrix product weights(Cout, C*k*k) x cols.
void im2col(const float* src, int C, int H, int W, int k, int pad, float* cols)
{
    const int64_t HW = static_cast<int64_t>(H) * W;
    for (int c = 0; c < C; ++c) {
        const float* plane = src + c * HW;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                float* dst = cols + ((static_cast<int64_t>(c) * k + ky) * k + kx) * HW;
                int ox0 = std::max(0, pad - kx);
                int ox1 = std::min(W, W + pad - kx);
                for (int oy = 0; oy < H; ++oy) {
                    int iy = oy + ky - pad;
                    float* drow = dst + static_cast<int64_t>(oy) * W;
                    if (iy < 0 || iy >= H) {
                        std::memset(drow, 0, sizeof(float) * W);
                        continue;
                    }
                    const float* srow = plane + static_cast<int64_t>(iy) * W;
                    for (int ox = 0; ox < ox0; ++ox) {
                        drow[ox] = 0.0f;
                    }
                    if (ox1 > ox0) {
                        std::memcpy(drow + ox0, srow + ox0 + kx - pad,
                                    sizeof(float) * static_cast<size_t>(ox1 - ox0));
                    }
                    for (int ox = ox1; ox < W; ++ox) {
                        drow[ox] = 0.0f;
                    }
                }
            }
        }
    }
}

// inverse scatter-add of im2col: dst(C,H,W) += unfold(cols)
void col2im_add(const float* cols, int C, int H, int W, int k, int pad, float* dst)
{
    const int64_t HW = static_cast<int64_t>(H) * W;
    for (int c = 0; c < C; ++c) {
        float* plane = dst + c * HW;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const float* src = cols + ((static_cast<int64_t>(c) * k + ky) * k + kx) * HW;
                int ox0 = std::max(0, pad - kx);
                int ox1 = std::min(W, W + pad - kx);
                for (int oy = 0; oy < H; ++oy) {
                    int iy = oy + ky - pad;
                    if (iy < 0 || iy >= H) {
                        continue;
                    }
                    const float* srow = src + static_cast<int64_t>(oy) * W;
                    float* drow = plane + static_cast<int64_t>(iy) * W + (kx - pad);
                    for (int ox = ox0; ox < ox1; ++ox) {
                        drow[ox] += srow[ox];
                    }
                }
            }
        }
    }
}

// C(M,N) = A(M,K) * B(K,N). Rows of C are independent, so the result is
// identical for any worker count.
void gemm_nn(int64_t M, int64_t N, int64_t K, const float* A, const float* B, float* C)
{
    parallel_for(M, [&](int64_t i0, int64_t i1) {
        for (int64_t i = i0; i < i1; ++i) {
            float* crow = C + i * N;
            std::memset(crow, 0, sizeof(float) * static_cast<size_t>(N));
            const float* arow = A + i * K;
            for (int64_t kk = 0; kk < K; ++kk) {
                const float a = arow[kk];
                const float* brow = B + kk * N;
                for (int64_t j = 0; j < N; ++j) {
                    crow[j] += a * brow[j];
                }
            }
        }
    });
}

// C(M,N) += A(M,K) * B(N,K)^T
void gemm_nt_acc(int64_t M, int64_t N, int64_t K, const float* A, const float* B, float* C)
{
    parallel_for(M, [&](int64_t i0, int64_t i1) {
        for (int64_t i = i0; i < i1; ++i) {
            const float* arow = A + i * K;
            float* crow = C + i * N;
            for (int64_t j = 0; j < N; ++j) {
                const float* brow = B + j * K;
                float acc = 0.0f;
                for (int64_t kk = 0; kk < K; ++kk) {
                    acc += arow[kk] * brow[kk];
                }
                crow[j] += acc;
            }
        }
    });
}

// C(M,N) = A(K,M)^T * B(K,N)
void gemm_tn(int64_t M, int64_t N, int64_t K, const float* A, const float* B, float* C)
{
    parallel_for(M, [&](int64_t i0, int64_t i1) {
        for (int64_t i = i0; i < i1; ++i) {
            float* crow = C + i * N;
            std::memset(crow, 0, sizeof(float) * static_cast<size_t>(N));
            for (int64_t kk = 0; kk < K; ++kk) {
                const float a = A[kk * M + i];
                const float* brow = B + kk * N;
                for (int64_t j = 0; j < N; ++j) {
                    crow[j] += a * brow[j];
                }
            }
        }
    });
}

void check_conv_shapes(const Tensor& input, const ConvParams& p)
{
    if (p.kernel != 1 && p.kernel != 3) {
        throw ConfigError(strcat_msg("layer ", p.name, ": kernel must be 1 or 3, got ", p.kernel));
    }
    if (input.shape().c != p.in_channels) {
        throw ConfigError(strcat_msg("layer ", p.name, ": input has ", input.shape().c,
                                     " channels, expected ", p.in_channels));
    }
    Shape4 expect{p.out_channels, p.in_channels, p.kernel, p.kernel};
    if (!(p.weights.shape() == expect)) {
        throw ConfigError(strcat_msg("layer ", p.name, ": weight tensor shape mismatch"));
    }
}

} // namespace

Tensor conv2d_forward(const Tensor& input, const ConvParams& params)
{
    check_conv_shapes(input, params);
    const int N = input.shape().n, C = input.shape().c;
    const int H = input.shape().h, W = input.shape().w;
    const int k = params.kernel, pad = params.padding();
    const int64_t HW = static_cast<int64_t>(H) * W;
    const int64_t K = static_cast<int64_t>(C) * k * k;

    Tensor out(N, params.out_channels, H, W);
    std::vector<float> cols;
    if (k > 1) {
        cols.resize(static_cast<size_t>(K * HW));
    }
    for (int n = 0; n < N; ++n) {
        const float* B = input.plane(n, 0);
        if (k > 1) {
            im2col(B, C, H, W, k, pad, cols.data());
            B = cols.data();
        }
        gemm_nn(params.out_channels, HW, K, params.weights.data(), B, out.plane(n, 0));
    }
    return out;
}

void conv2d_backward(const Tensor& input, const ConvParams& params, const Tensor& grad_out,
                     Tensor& grad_input, Tensor& grad_weights)
{
    check_conv_shapes(input, params);
    Shape4 expect{input.shape().n, params.out_channels, input.shape().h, input.shape().w};
    if (!(grad_out.shape() == expect)) {
        throw ConfigError(strcat_msg("layer ", params.name, ": upstream gradient shape mismatch"));
    }

    const int N = input.shape().n, C = input.shape().c;
    const int H = input.shape().h, W = input.shape().w;
    const int k = params.kernel, pad = params.padding();
    const int64_t HW = static_cast<int64_t>(H) * W;
    const int64_t K = static_cast<int64_t>(C) * k * k;

    grad_input = Tensor(input.shape());
    grad_weights = Tensor(params.weights.shape());

    std::vector<float> cols, grad_cols;
    if (k > 1) {
        cols.resize(static_cast<size_t>(K * HW));
        grad_cols.resize(static_cast<size_t>(K * HW));
    }
    for (int n = 0; n < N; ++n) {
        const float* B = input.plane(n, 0);
        if (k > 1) {
            im2col(B, C, H, W, k, pad, cols.data());
            B = cols.data();
        }
        // dW += dOut x cols^T
        gemm_nt_acc(params.out_channels, K, HW, grad_out.plane(n, 0), B, grad_weights.data());
        // dCols = W^T x dOut, then fold back onto the input
        float* gcols = k > 1 ? grad_cols.data() : grad_input.plane(n, 0);
        gemm_tn(K, HW, params.out_channels, params.weights.data(), grad_out.plane(n, 0), gcols);
        if (k > 1) {
            col2im_add(gcols, C, H, W, k, pad, grad_input.plane(n, 0));
        }
    }
}

namespace {

void check_bn_shapes(const Tensor& input, const BatchNormParams& params)
{
    const int C = input.shape().c;
    if (static_cast<int>(params.gamma.size()) != C || static_cast<int>(params.beta.size()) != C ||
        static_cast<int>(params.rolling_mean.size()) != C ||
        static_cast<int>(params.rolling_var.size()) != C) {
        throw ConfigError(strcat_msg("batchnorm parameter length mismatch: input has ", C,
                                     " channels, gamma has ", params.gamma.size()));
    }
}

} // namespace

Tensor batchnorm_forward(const Tensor& input, const BatchNormParams& params)
{
    check_bn_shapes(input, params);
    const int N = input.shape().n, C = input.shape().c;
    const int64_t HW = static_cast<int64_t>(input.shape().h) * input.shape().w;
    Tensor out(input.shape());
    for (int n = 0; n < N; ++n) {
        for (int c = 0; c < C; ++c) {
            const float inv_std = 1.0f / std::sqrt(params.rolling_var[c] + params.epsilon);
            const float scale = params.gamma[c] * inv_std;
            const float shift = params.beta[c] - params.rolling_mean[c] * scale;
            const float* src = input.plane(n, c);
            float* dst = out.plane(n, c);
            for (int64_t i = 0; i < HW; ++i) {
                dst[i] = src[i] * scale + shift;
            }
        }
    }
    return out;
}

Tensor batchnorm_forward(const Tensor& input, BatchNormParams& params, BnMode mode, BnCache* cache)
{
    if (mode == BnMode::Infer) {
        return batchnorm_forward(input, static_cast<const BatchNormParams&>(params));
    }
    check_bn_shapes(input, params);

    const int N = input.shape().n, C = input.shape().c, H = input.shape().h, W = input.shape().w;
    const int64_t HW = static_cast<int64_t>(H) * W;
    Tensor out(input.shape());

    if (!cache) {
        throw ConfigError("batchnorm train mode requires a statistics cache");
    }
    const double m = static_cast<double>(N) * HW;
    cache->mean.assign(static_cast<size_t>(C), 0.0f);
    cache->var.assign(static_cast<size_t>(C), 0.0f);
    cache->xhat = Tensor(input.shape());

    for (int c = 0; c < C; ++c) {
        double sum = 0.0;
        for (int n = 0; n < N; ++n) {
            const float* src = input.plane(n, c);
            for (int64_t i = 0; i < HW; ++i) {
                sum += src[i];
            }
        }
        const double mean = sum / m;
        double sq = 0.0;
        for (int n = 0; n < N; ++n) {
            const float* src = input.plane(n, c);
            for (int64_t i = 0; i < HW; ++i) {
                const double d = src[i] - mean;
                sq += d * d;
            }
        }
        const double var = sq / m;
        cache->mean[c] = static_cast<float>(mean);
        cache->var[c] = static_cast<float>(var);

        const float inv_std = 1.0f / std::sqrt(cache->var[c] + params.epsilon);
        for (int n = 0; n < N; ++n) {
            const float* src = input.plane(n, c);
            float* xh = cache->xhat.plane(n, c);
            float* dst = out.plane(n, c);
            for (int64_t i = 0; i < HW; ++i) {
                xh[i] = (src[i] - cache->mean[c]) * inv_std;
                dst[i] = xh[i] * params.gamma[c] + params.beta[c];
            }
        }

        params.rolling_mean[c] = params.momentum * params.rolling_mean[c] +
                                 (1.0f - params.momentum) * cache->mean[c];
        params.rolling_var[c] = params.momentum * params.rolling_var[c] +
                                (1.0f - params.momentum) * cache->var[c];
    }
    return out;
}

Tensor batchnorm_backward(const Tensor& grad_out, const BatchNormParams& params,
                          const BnCache& cache, std::vector<float>& grad_gamma,
                          std::vector<float>& grad_beta)
{
    const int N = grad_out.shape().n, C = grad_out.shape().c;
    const int64_t HW = static_cast<int64_t>(grad_out.shape().h) * grad_out.shape().w;
    const double m = static_cast<double>(N) * HW;

    grad_gamma.assign(static_cast<size_t>(C), 0.0f);
    grad_beta.assign(static_cast<size_t>(C), 0.0f);
    Tensor grad_in(grad_out.shape());

    for (int c = 0; c < C; ++c) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (int n = 0; n < N; ++n) {
            const float* dy = grad_out.plane(n, c);
            const float* xh = cache.xhat.plane(n, c);
            for (int64_t i = 0; i < HW; ++i) {
                sum_dy += dy[i];
                sum_dy_xhat += static_cast<double>(dy[i]) * xh[i];
            }
        }
        grad_gamma[c] = static_cast<float>(sum_dy_xhat);
        grad_beta[c] = static_cast<float>(sum_dy);

        const double inv_std = 1.0 / std::sqrt(static_cast<double>(cache.var[c]) + params.epsilon);
        const double k = params.gamma[c] * inv_std / m;
        for (int n = 0; n < N; ++n) {
            const float* dy = grad_out.plane(n, c);
            const float* xh = cache.xhat.plane(n, c);
            float* dx = grad_in.plane(n, c);
            for (int64_t i = 0; i < HW; ++i) {
                dx[i] = static_cast<float>(k * (m * dy[i] - sum_dy - xh[i] * sum_dy_xhat));
            }
        }
    }
    return grad_in;
}

Tensor leaky_relu(const Tensor& input, float slope)
{
    Tensor out(input.shape());
    const float* src = input.data();
    float* dst = out.data();
    for (int64_t i = 0; i < input.count(); ++i) {
        dst[i] = src[i] > 0.0f ? src[i] : slope * src[i];
    }
    return out;
}

Tensor leaky_relu_backward(const Tensor& input, const Tensor& grad_out, float slope)
{
    if (!(input.shape() == grad_out.shape())) {
        throw ConfigError("leaky_relu backward shape mismatch");
    }
    Tensor grad_in(input.shape());
    const float* x = input.data();
    const float* dy = grad_out.data();
    float* dx = grad_in.data();
    for (int64_t i = 0; i < input.count(); ++i) {
        dx[i] = x[i] > 0.0f ? dy[i] : slope * dy[i];
    }
    return grad_in;
}

Tensor maxpool2x2_forward(const Tensor& input, std::vector<int32_t>& argmax, const std::string& name)
{
    const int H = input.shape().h, W = input.shape().w;
    if (H % 2 != 0 || W % 2 != 0) {
        throw ConfigError(strcat_msg("layer ", name, ": spatial size ", H, "x", W,
                                     " is not divisible by the 2x2 pooling window"));
    }
    if (input.count() > std::numeric_limits<int32_t>::max()) {
        throw ConfigError(strcat_msg("layer ", name, ": tensor too large for pooling index"));
    }

    Tensor out(input.shape().n, input.shape().c, H / 2, W / 2);
    argmax.assign(static_cast<size_t>(out.count()), 0);
    int64_t oi = 0;
    for (int n = 0; n < input.shape().n; ++n) {
        for (int c = 0; c < input.shape().c; ++c) {
            for (int oy = 0; oy < H / 2; ++oy) {
                for (int ox = 0; ox < W / 2; ++ox, ++oi) {
                    float best = -std::numeric_limits<float>::infinity();
                    int32_t best_idx = 0;
                    for (int dy = 0; dy < 2; ++dy) {
                        for (int dx = 0; dx < 2; ++dx) {
                            int64_t idx = input.index(n, c, 2 * oy + dy, 2 * ox + dx);
                            float v = input.data()[idx];
                            if (v > best) { // ties keep the first in row-major order
                                best = v;
                                best_idx = static_cast<int32_t>(idx);
                            }
                        }
                    }
                    out.data()[oi] = best;
                    argmax[static_cast<size_t>(oi)] = best_idx;
                }
            }
        }
    }
    return out;
}

Tensor maxpool2x2_backward(const Tensor& grad_out, const std::vector<int32_t>& argmax,
                           const Shape4& input_shape)
{
    if (static_cast<int64_t>(argmax.size()) != grad_out.count()) {
        throw ConfigError("maxpool backward: argmax length does not match gradient");
    }
    Tensor grad_in(input_shape);
    for (int64_t i = 0; i < grad_out.count(); ++i) {
        grad_in.data()[argmax[static_cast<size_t>(i)]] += grad_out.data()[i];
    }
    return grad_in;
}

void softmax(std::span<const float> logits, std::span<float> out)
{
    float mx = logits[0];
    for (float v : logits) {
        mx = std::max(mx, v);
    }
    float sum = 0.0f;
    for (size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        sum += out[i];
    }
    for (size_t i = 0; i < out.size(); ++i) {
        out[i] /= sum;
    }
}

} // namespace sssdet
