#include "qdwh/loss.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "qdwh/error.hpp"

namespace qdwh {

namespace {

// Stable log softmax: logit - max - log(sum exp(logit - max)).
Vec log_softmax(const Vec& logits) {
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - mx);
    double lse = std::log(sum);
    Vec out(logits.size());
    for (std::size_t j = 0; j < logits.size(); ++j) out[j] = logits[j] - mx - lse;
    return out;
}

std::size_t count_positives(const std::uint8_t* label, std::size_t c) {
    std::size_t n = 0;
    for (std::size_t j = 0; j < c; ++j)
        if (label[j]) ++n;
    if (n == 0) throw LabelError("label row has no positive class");
    return n;
}

}  // namespace

double weighted_sq_euclidean(const Vec& w_row, const HashActivation& h_a,
                             const HashActivation& h_b) {
    require_dims(w_row.size() == h_a.values.size() && w_row.size() == h_b.values.size(),
                 "weight row and activations must share length");
    double acc = 0.0;
    for (std::size_t k = 0; k < w_row.size(); ++k) {
        double d = h_a.values[k] - h_b.values[k];
        acc += w_row[k] * w_row[k] * d * d;
    }
    return acc;
}

double triplet_loss(const LossConfig& cfg, const Vec& w_row, const HashActivation& h_anchor,
                    const HashActivation& h_pos, const HashActivation& h_neg) {
    double d_ap = weighted_sq_euclidean(w_row, h_anchor, h_pos);
    double d_an = weighted_sq_euclidean(w_row, h_anchor, h_neg);
    return std::max(0.0, cfg.margin + d_ap - d_an);
}

TripletGradients triplet_grads(const LossConfig& cfg, const Vec& w_row,
                               const HashActivation& h_anchor, const HashActivation& h_pos,
                               const HashActivation& h_neg, const std::uint8_t* anchor_label,
                               std::size_t c) {
    std::size_t q = w_row.size();
    require_dims(h_anchor.values.size() == q && h_pos.values.size() == q &&
                     h_neg.values.size() == q,
                 "weight row and activations must share length");
    TripletGradients g;
    g.d_anchor.assign(q, 0.0);
    g.d_positive.assign(q, 0.0);
    g.d_negative.assign(q, 0.0);
    g.d_weights = Matrix(c, q, 0.0);

    double d_ap = weighted_sq_euclidean(w_row, h_anchor, h_pos);
    double d_an = weighted_sq_euclidean(w_row, h_anchor, h_neg);
    if (cfg.margin + d_ap - d_an <= 0.0) return g;

    std::size_t n_labels = count_positives(anchor_label, c);
    double inv = 1.0 / static_cast<double>(n_labels);
    for (std::size_t k = 0; k < q; ++k) {
        double w2 = w_row[k] * w_row[k];
        double ap = h_anchor.values[k] - h_pos.values[k];
        double an = h_anchor.values[k] - h_neg.values[k];
        g.d_anchor[k] = 2.0 * w2 * (h_neg.values[k] - h_pos.values[k]);
        g.d_positive[k] = 2.0 * w2 * (h_pos.values[k] - h_anchor.values[k]);
        g.d_negative[k] = 2.0 * w2 * (h_anchor.values[k] - h_neg.values[k]);
        double dw = 2.0 * w_row[k] * (ap * ap - an * an) * inv;
        for (std::size_t i = 0; i < c; ++i)
            if (anchor_label[i]) g.d_weights(i, k) = dw;
    }
    return g;
}

double softmax_xent_loss(const Vec& logits, const std::uint8_t* label, std::size_t c) {
    require_dims(logits.size() == c, "logit count must match class count");
    count_positives(label, c);
    Vec ls = log_softmax(logits);
    double loss = 0.0;
    for (std::size_t j = 0; j < c; ++j)
        if (label[j]) loss -= ls[j];
    return loss;
}

Vec softmax_logit_grad(const Vec& logits, const std::uint8_t* label, std::size_t c) {
    require_dims(logits.size() == c, "logit count must match class count");
    std::size_t n_pos = count_positives(label, c);
    Vec ls = log_softmax(logits);
    Vec g(c);
    for (std::size_t j = 0; j < c; ++j)
        g[j] = static_cast<double>(n_pos) * std::exp(ls[j]) - (label[j] ? 1.0 : 0.0);
    return g;
}

SoftmaxGradient softmax_grad(const Vec& rep, const Vec& logits, const std::uint8_t* label,
                             std::size_t c) {
    Vec dl = softmax_logit_grad(logits, label, c);
    SoftmaxGradient g;
    g.d_weight = Matrix(rep.size(), c, 0.0);
    g.d_bias = dl;
    for (std::size_t i = 0; i < rep.size(); ++i)
        for (std::size_t j = 0; j < c; ++j) g.d_weight(i, j) = rep[i] * dl[j];
    return g;
}

double finite_diff_check(const std::function<double(const Vec&)>& loss_fn, const Vec& params,
                         const Vec& analytic_grad, double step) {
    if (!(step > 0.0)) throw ArgumentError("finite difference step must be positive");
    require_dims(params.size() == analytic_grad.size(),
                 "gradient length must match parameter count");
    Vec p = params;
    double worst = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        double saved = p[k];
        p[k] = saved + step;
        double up = loss_fn(p);
        p[k] = saved - step;
        double down = loss_fn(p);
        p[k] = saved;
        double central = (up - down) / (2.0 * step);
        if (!std::isfinite(central) || !std::isfinite(analytic_grad[k]))
            throw NumericError("non-finite value in finite difference check");
        double denom = std::max(1e-12, std::abs(analytic_grad[k]) + std::abs(central));
        worst = std::max(worst, std::abs(analytic_grad[k] - central) / denom);
    }
    return worst;
}

}  // namespace qdwh
