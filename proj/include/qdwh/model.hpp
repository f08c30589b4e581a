#pragma once

#include <cstdint>
#include <vector>

#include "qdwh/matrix.hpp"
#include "qdwh/rng.hpp"

namespace qdwh {

// One affine map of the feature stack; hidden layers get tanh applied on
// their output, the last layer feeds the hash and classifier heads raw.
struct AffineLayer {
    Matrix weight;  // in x out
    Vec bias;       // out
};

// All trainable parameters of the two-stream network.
struct ModelParams {
    std::vector<AffineLayer> feature_layers;
    Matrix hash_weight;        // d_f x q
    Vec hash_bias;             // q
    Matrix class_weights;      // c x q, elementwise nonnegative
    Matrix classifier_weight;  // d_f x c
    Vec classifier_bias;       // c

    std::size_t code_length() const { return hash_bias.size(); }
    std::size_t num_classes() const { return classifier_bias.size(); }
    std::size_t rep_dim() const { return hash_weight.rows; }
    std::size_t input_dim() const {
        return feature_layers.empty() ? rep_dim() : feature_layers.front().weight.rows;
    }
};

struct Dataset {
    std::size_t num_items = 0;
    std::size_t feature_dim = 0;
    std::size_t num_classes = 0;
    std::vector<double> features;      // n x d, row-major
    std::vector<std::uint8_t> labels;  // n x c, row-major multi-hot

    const double* feature(std::size_t i) const { return features.data() + i * feature_dim; }
    const std::uint8_t* label(std::size_t i) const { return labels.data() + i * num_classes; }
};

// Throws LabelError if any item has no positive label, DimensionError on
// inconsistent sizes or non-0/1 label entries.
void validate_dataset(const Dataset& ds);

// Sigmoid outputs of the hash layer, each strictly inside (0,1).
struct HashActivation {
    Vec values;
};

// Softmax output of the classification head; nonnegative, sums to 1.
struct ClassProbabilities {
    Vec probs;
};

// dims = [input, hidden..., rep]; a single entry means an empty feature
// stack (features pass through). Hash and classifier weights are zero-mean
// with scale 1/sqrt(fan_in); the class-wise weight matrix starts at all
// ones; biases start at zero. Deterministic given the seed.
ModelParams init_params(const std::vector<std::size_t>& dims, std::size_t q, std::size_t c,
                        std::uint64_t seed);

// W^T x + b for an in x out weight matrix.
Vec affine_forward(const Matrix& weight, const Vec& bias, const Vec& x);

Vec forward_features(const ModelParams& params, const Vec& x);
HashActivation forward_hash(const ModelParams& params, const Vec& rep);
ClassProbabilities forward_class_probs(const ModelParams& params, const Vec& rep);

// bit k = 1 iff h_k >= 0.5 (code bit 1 stands for +1, 0 for -1).
std::vector<std::uint8_t> binarize(const HashActivation& h);

// Mean of the class_weights rows picked out by the positive labels.
Vec class_weight_row(const ModelParams& params, const std::uint8_t* label, std::size_t c);

double sigmoid_stable(double z);

// Flat layout: feature layers in order (weight row-major, then bias),
// hash_weight, hash_bias, class_weights, classifier_weight, classifier_bias.
std::size_t param_count(const ModelParams& params);
Vec flatten_params(const ModelParams& params);
ModelParams unflatten_params(const ModelParams& shape, const Vec& flat);

}  // namespace qdwh
