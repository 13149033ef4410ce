#include "sssdet/train.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <numeric>
#include <sstream>

#include "sssdet/image.hpp"

namespace sssdet {

float learning_rate_at(const TrainConfig& cfg, int iteration)
{
    return iteration >= cfg.lr_drop_iteration ? cfg.learning_rate * cfg.lr_drop_factor
                                              : cfg.learning_rate;
}

TrainState make_state(const NetParams& params)
{
    TrainState state;
    state.velocity = make_grads(params);
    return state;
}

void sgd_step(NetParams& params, const NetGrads& grads, TrainState& state, const TrainConfig& cfg)
{
    const float lr = learning_rate_at(cfg, state.iteration);
    for (size_t b = 0; b < params.blocks.size(); ++b) {
        ConvBlock& block = params.blocks[b];
        float* w = block.conv.weights.data();
        float* v = state.velocity.weights[b].data();
        const float* g = grads.weights[b].data();
        for (int64_t i = 0; i < block.conv.weights.count(); ++i) {
            v[i] = cfg.momentum * v[i] - lr * (g[i] + cfg.weight_decay * w[i]);
            w[i] += v[i];
        }
        if (block.bn) {
            for (size_t c = 0; c < state.velocity.gamma[b].size(); ++c) {
                float& vg = state.velocity.gamma[b][c];
                float& vb = state.velocity.beta[b][c];
                vg = cfg.momentum * vg - lr * grads.gamma[b][c];
                vb = cfg.momentum * vb - lr * grads.beta[b][c];
                block.bn->gamma[c] += vg;
                block.bn->beta[c] += vb;
            }
        }
    }
    ++state.iteration;
}

void update_running_loss(TrainState& state, double minibatch_loss)
{
    if (!state.has_running_loss) {
        state.running_loss = minibatch_loss;
        state.has_running_loss = true;
    } else {
        state.running_loss = 0.9 * state.running_loss + 0.1 * minibatch_loss;
    }
}

std::string loss_log_csv(const std::vector<TrainLogEntry>& log)
{
    std::ostringstream os;
    os << "iteration,lr,loss\n";
    char buf[96];
    for (const TrainLogEntry& e : log) {
        std::snprintf(buf, sizeof(buf), "%d,%g,%.6f\n", e.iteration, static_cast<double>(e.lr),
                      e.running_loss);
        os << buf;
    }
    return os.str();
}

namespace {

// endless seeded sample stream: a reshuffled pass over the dataset per epoch
class SampleStream {
public:
    SampleStream(size_t n, uint64_t seed) : order_(n), rng_(seed)
    {
        std::iota(order_.begin(), order_.end(), size_t{0});
        rng_.shuffle(order_);
    }

    size_t next()
    {
        if (pos_ == order_.size()) {
            rng_.shuffle(order_);
            pos_ = 0;
        }
        return order_[pos_++];
    }

private:
    std::vector<size_t> order_;
    Rng rng_;
    size_t pos_ = 0;
};

} // namespace

NetParams train(const NetworkDef& def, const std::vector<std::string>& image_paths,
                const TrainConfig& cfg, uint64_t seed, std::vector<TrainLogEntry>& log,
                const std::string& checkpoint_path)
{
    if (!def.has_region()) {
        throw ConfigError("training needs a config with a [region] layer");
    }
    if (image_paths.empty()) {
        throw DataError("training dataset is empty");
    }
    if (cfg.minibatch < 1 || cfg.max_iterations < 0) {
        throw ConfigError("minibatch must be >= 1 and max_iterations >= 0");
    }

    const LayerSpec& region = def.region();
    RegionLossConfig loss_cfg{cfg.scales, cfg.ignore_iou_threshold};

    // surface label problems before any compute
    std::vector<std::vector<GroundTruthBox>> labels;
    labels.reserve(image_paths.size());
    for (const std::string& path : image_paths) {
        labels.push_back(load_labels(label_path_for(path)));
    }

    NetParams params = init_weights(def, seed);
    TrainState state = make_state(params);
    log.clear();

    const int B = cfg.minibatch;
    SampleStream stream(image_paths.size(), seed + 0x51ED5EEDULL);
    const int D = region.num_anchors * (5 + region.classes);

    for (int it = 0; it < cfg.max_iterations; ++it) {
        std::vector<size_t> picks(static_cast<size_t>(B));
        for (int b = 0; b < B; ++b) {
            picks[static_cast<size_t>(b)] = stream.next();
        }

        Tensor input(B, def.input_c, def.input_h, def.input_w);
        for (int b = 0; b < B; ++b) {
            Tensor one = load_and_resize(image_paths[picks[static_cast<size_t>(b)]],
                                         def.input_w, def.input_h);
            std::memcpy(input.plane(b, 0), one.data(),
                        static_cast<size_t>(one.count()) * sizeof(float));
        }

        ForwardTrace trace;
        Tensor head = forward_train(def, params, input, trace);
        const int S = head.shape().h;
        const int64_t per_image = static_cast<int64_t>(D) * S * S;

        Tensor grad_head(head.shape());
        double batch_loss = 0.0;
        for (int b = 0; b < B; ++b) {
            Tensor slice(1, D, S, S);
            std::memcpy(slice.data(), head.plane(b, 0),
                        static_cast<size_t>(per_image) * sizeof(float));
            Tensor slice_grad;
            batch_loss += region_loss(slice, labels[picks[static_cast<size_t>(b)]],
                                      region.anchors, region.classes, loss_cfg, slice_grad);
            float* dst = grad_head.plane(b, 0);
            const float* src = slice_grad.data();
            for (int64_t i = 0; i < per_image; ++i) {
                dst[i] = src[i] / B;
            }
        }
        batch_loss /= B;

        NetGrads grads = backward(def, params, trace, grad_head);
        TrainLogEntry entry{state.iteration, learning_rate_at(cfg, state.iteration), 0.0};
        sgd_step(params, grads, state, cfg);
        params.seen += B;

        update_running_loss(state, batch_loss);
        entry.running_loss = state.running_loss;
        log.push_back(entry);

        if (!checkpoint_path.empty() && cfg.checkpoint_interval > 0 &&
            (it + 1) % cfg.checkpoint_interval == 0) {
            save_weights(def, params, checkpoint_path);
        }
    }

    if (!checkpoint_path.empty()) {
        save_weights(def, params, checkpoint_path);
    }
    return params;
}

namespace {

// overlap of two co-centered (w, h) shapes
float shape_overlap(float w1, float h1, float w2, float h2)
{
    const float inter = std::min(w1, w2) * std::min(h1, h2);
    const float uni = w1 * h1 + w2 * h2 - inter;
    return uni > 0.0f ? inter / uni : 0.0f;
}

} // namespace

std::vector<Anchor> cluster_anchors(const std::vector<GroundTruthBox>& truths, int k,
                                    int grid_size, int iterations, uint64_t seed)
{
    if (k < 1) {
        throw ConfigError(strcat_msg("anchor count must be >= 1, got ", k));
    }
    if (grid_size < 1) {
        throw ConfigError(strcat_msg("grid size must be >= 1, got ", grid_size));
    }
    if (static_cast<int>(truths.size()) < k) {
        throw DataError(strcat_msg("need at least ", k, " labels to derive ", k,
                                   " anchors, got ", truths.size()));
    }

    const int n = static_cast<int>(truths.size());
    std::vector<int> order(truths.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);

    std::vector<Anchor> centroids(static_cast<size_t>(k));
    for (int c = 0; c < k; ++c) {
        centroids[c] = {truths[order[c]].w, truths[order[c]].h};
    }

    std::vector<int> member(truths.size(), -1);
    for (int pass = 0; pass < iterations; ++pass) {
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            float best_overlap = -1.0f;
            for (int c = 0; c < k; ++c) {
                const float o =
                    shape_overlap(truths[i].w, truths[i].h, centroids[c].w, centroids[c].h);
                if (o > best_overlap) {
                    best_overlap = o;
                    best = c;
                }
            }
            if (member[i] != best) {
                member[i] = best;
                changed = true;
            }
        }
        if (!changed) {
            break;
        }
        // empty clusters keep their previous centroid
        for (int c = 0; c < k; ++c) {
            double sw = 0.0, sh = 0.0;
            int count = 0;
            for (int i = 0; i < n; ++i) {
                if (member[i] == c) {
                    sw += truths[i].w;
                    sh += truths[i].h;
                    ++count;
                }
            }
            if (count > 0) {
                centroids[c].w = static_cast<float>(sw / count);
                centroids[c].h = static_cast<float>(sh / count);
            }
        }
    }

    for (Anchor& a : centroids) {
        a.w *= grid_size;
        a.h *= grid_size;
    }
    std::sort(centroids.begin(), centroids.end(),
              [](const Anchor& a, const Anchor& b) { return a.w * a.h < b.w * b.h; });
    return centroids;
}

} // namespace sssdet
