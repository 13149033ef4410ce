#ifndef SSSDET_TRAIN_HPP
#define SSSDET_TRAIN_HPP

#include <string>
#include <vector>

#include "sssdet/loss.hpp"
#include "sssdet/network.hpp"

namespace sssdet {

struct TrainConfig {
    int minibatch = 4;
    float learning_rate = 0.001f;
    float momentum = 0.9f;
    float weight_decay = 0.0005f;
    int lr_drop_iteration = 20000;
    float lr_drop_factor = 0.1f;
    int max_iterations = 1000;
    LossScales scales;
    float ignore_iou_threshold = 0.6f;
    int checkpoint_interval = 0; // 0: write weights only when done
};

// flat schedule with one drop: lr * factor from lr_drop_iteration onward
float learning_rate_at(const TrainConfig& cfg, int iteration);

struct TrainState {
    int iteration = 0;
    NetGrads velocity; // momentum buffers, shaped like the gradients
    double running_loss = 0.0;
    bool has_running_loss = false;
};

TrainState make_state(const NetParams& params);

// v <- momentum * v - lr * (grad + weight_decay * param) for conv weights;
// batchnorm gamma/beta skip the decay term. Then param += v and the
// iteration counter advances.
void sgd_step(NetParams& params, const NetGrads& grads, TrainState& state,
              const TrainConfig& cfg);

// 0.9 / 0.1 exponential moving average; the first sample seeds it
void update_running_loss(TrainState& state, double minibatch_loss);

struct TrainLogEntry {
    int iteration = 0; // 0-based
    float lr = 0.0f;
    double running_loss = 0.0;
};

// "iteration,lr,loss" rows, loss being the running average
std::string loss_log_csv(const std::vector<TrainLogEntry>& log);

// Initializes weights from the seed, then runs minibatch SGD: images are
// drawn from a seeded shuffle that reshuffles each epoch, the gradient is
// averaged over the minibatch, and batchnorm sees the whole minibatch as
// one batch. Every image path needs a sibling label file. log receives one
// entry per iteration. checkpoint_path may be empty (nothing written);
// checkpoints overwrite the same file.
NetParams train(const NetworkDef& def, const std::vector<std::string>& image_paths,
                const TrainConfig& cfg, uint64_t seed, std::vector<TrainLogEntry>& log,
                const std::string& checkpoint_path = "");

// Derives k anchor priors from label shapes: seeded k-means with 1 - IoU
// as the distance, boxes co-centered. Returns anchors in grid-cell units,
// sorted by area ascending. Needs at least k labels.
std::vector<Anchor> cluster_anchors(const std::vector<GroundTruthBox>& truths, int k,
                                    int grid_size, int iterations, uint64_t seed);

} // namespace sssdet

#endif
