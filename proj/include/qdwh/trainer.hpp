#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "qdwh/loss.hpp"
#include "qdwh/matrix.hpp"
#include "qdwh/model.hpp"
#include "qdwh/rng.hpp"

namespace qdwh {

struct TrainConfig {
    std::size_t batch_size = 64;
    double initial_lr = 0.001;
    double lr_drop_factor = 10.0;
    std::size_t lr_drop_every = 2000;
    double weight_decay = 0.0005;
    std::size_t max_steps = 1000;
    double margin = 1.0;
    double loss_balance = 1.0;  // weight of the classification loss
    std::uint64_t seed = 1;
    std::size_t convergence_window = 100;
    double convergence_tol = 0.0;  // 0 disables the early-stop test
    // keeps class_weights fixed (no gradient, no update); the unweighted
    // ablation trains this way with the all-ones initialization
    bool freeze_class_weights = false;
};

void validate_train_config(const TrainConfig& cfg);

// lr(step) = initial / factor^floor(step / drop_every), evaluated by
// repeated division so the schedule is reproducible bit for bit.
double learning_rate(const TrainConfig& cfg, std::size_t step);

struct TrainReport {
    std::vector<double> triplet_loss;     // per step, mean over batch
    std::vector<double> class_loss;       // per step, mean over 3m members
    std::vector<double> lr;               // per step
    std::vector<double> active_fraction;  // per step, hinge-active share
    std::size_t steps = 0;
    bool converged = false;
};

// Same shapes as ModelParams, holding loss gradients.
struct GradientSet {
    std::vector<AffineLayer> feature_layers;
    Matrix hash_weight;
    Vec hash_bias;
    Matrix class_weights;
    Matrix classifier_weight;
    Vec classifier_bias;

    static GradientSet zeros_like(const ModelParams& p);
};

std::vector<Triplet> sample_triplets(const Dataset& data, std::size_t batch_size, Rng& rng);

struct BatchGradients {
    GradientSet grads;
    double triplet_loss = 0.0;
    double class_loss = 0.0;
    double active_fraction = 0.0;
};

// Gradient of mean triplet loss + loss_balance * mean classification loss
// (classification averaged over all 3m triplet member occurrences).
BatchGradients backward_full(const ModelParams& params, const Dataset& data,
                             const std::vector<Triplet>& batch, const TrainConfig& cfg);

// One SGD update. Weight decay applies to everything except class_weights,
// which are decay-free and projected to max(0, value) afterwards.
ModelParams sgd_step(const ModelParams& params, const GradientSet& grads, std::size_t step,
                     const TrainConfig& cfg);

// Called after each completed update with the step index and new params.
using StepObserver = std::function<void(std::size_t, const ModelParams&)>;

struct TrainResult {
    ModelParams params;
    TrainReport report;
};

TrainResult train(const ModelParams& start, const Dataset& data, const TrainConfig& cfg,
                  const StepObserver& observer = {});

}  // namespace qdwh
