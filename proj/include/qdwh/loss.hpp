#pragma once

#include <cstdint>
#include <functional>

#include "qdwh/matrix.hpp"
#include "qdwh/model.hpp"

namespace qdwh {

// Indices into a dataset: anchor and positive share at least one label,
// anchor and negative share none.
struct Triplet {
    std::size_t anchor_idx;
    std::size_t positive_idx;
    std::size_t negative_idx;
};

struct LossConfig {
    double margin = 1.0;
};

// Gradients of one triplet's ranking loss w.r.t. the three hash
// activations and the class-wise weight matrix (rows fused by the anchor's
// labels only; everything zero when the hinge is inactive).
struct TripletGradients {
    Vec d_anchor;
    Vec d_positive;
    Vec d_negative;
    Matrix d_weights;  // c x q
};

// sum_k w_row[k]^2 (a[k]-b[k])^2
double weighted_sq_euclidean(const Vec& w_row, const HashActivation& h_a, const HashActivation& h_b);

// max(0, margin + d_w(a,p) - d_w(a,n)) with the anchor's fused weight row.
double triplet_loss(const LossConfig& cfg, const Vec& w_row, const HashActivation& h_anchor,
                    const HashActivation& h_pos, const HashActivation& h_neg);

TripletGradients triplet_grads(const LossConfig& cfg, const Vec& w_row,
                               const HashActivation& h_anchor, const HashActivation& h_pos,
                               const HashActivation& h_neg, const std::uint8_t* anchor_label,
                               std::size_t c);

// Multilabel softmax cross entropy: -sum over positive labels of the log
// softmax of that class.
double softmax_xent_loss(const Vec& logits, const std::uint8_t* label, std::size_t c);

struct SoftmaxGradient {
    Matrix d_weight;  // d_f x c
    Vec d_bias;       // c
};

SoftmaxGradient softmax_grad(const Vec& rep, const Vec& logits, const std::uint8_t* label,
                             std::size_t c);

// Gradient of softmax_xent_loss w.r.t. the logits themselves (shared by
// softmax_grad and the trainer's backward pass).
Vec softmax_logit_grad(const Vec& logits, const std::uint8_t* label, std::size_t c);

// Max over coordinates of |analytic - central difference| /
// max(1e-12, |analytic| + |central|). loss_fn must be pure; params is
// copied and perturbed one coordinate at a time.
double finite_diff_check(const std::function<double(const Vec&)>& loss_fn, const Vec& params,
                         const Vec& analytic_grad, double step);

}  // namespace qdwh
