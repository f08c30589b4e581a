#include "qdwh/trainer.hpp"

#include <cmath>
#include <unordered_map>
#include <utility>

#include "qdwh/error.hpp"
#include "qdwh/kernels.hpp"

namespace qdwh {

void validate_train_config(const TrainConfig& cfg) {
    if (cfg.batch_size < 1) throw ArgumentError("batch_size must be >= 1");
    if (!(cfg.initial_lr > 0.0)) throw ArgumentError("initial_lr must be positive");
    if (!(cfg.lr_drop_factor >= 1.0)) throw ArgumentError("lr_drop_factor must be >= 1");
    if (cfg.lr_drop_every < 1) throw ArgumentError("lr_drop_every must be >= 1");
    if (!(cfg.weight_decay >= 0.0)) throw ArgumentError("weight_decay must be >= 0");
    if (!(cfg.margin > 0.0)) throw ArgumentError("margin must be positive");
    if (!(cfg.loss_balance >= 0.0)) throw ArgumentError("loss_balance must be >= 0");
    if (cfg.convergence_window < 1) throw ArgumentError("convergence_window must be >= 1");
    if (!(cfg.convergence_tol >= 0.0)) throw ArgumentError("convergence_tol must be >= 0");
}

double learning_rate(const TrainConfig& cfg, std::size_t step) {
    double lr = cfg.initial_lr;
    for (std::size_t i = 0; i < step / cfg.lr_drop_every; ++i) lr /= cfg.lr_drop_factor;
    return lr;
}

GradientSet GradientSet::zeros_like(const ModelParams& p) {
    GradientSet g;
    for (const AffineLayer& l : p.feature_layers) {
        AffineLayer z;
        z.weight = Matrix(l.weight.rows, l.weight.cols, 0.0);
        z.bias.assign(l.bias.size(), 0.0);
        g.feature_layers.push_back(std::move(z));
    }
    g.hash_weight = Matrix(p.hash_weight.rows, p.hash_weight.cols, 0.0);
    g.hash_bias.assign(p.hash_bias.size(), 0.0);
    g.class_weights = Matrix(p.class_weights.rows, p.class_weights.cols, 0.0);
    g.classifier_weight = Matrix(p.classifier_weight.rows, p.classifier_weight.cols, 0.0);
    g.classifier_bias.assign(p.classifier_bias.size(), 0.0);
    return g;
}

namespace {

bool shares_label(const Dataset& data, std::size_t i, std::size_t j) {
    const std::uint8_t* a = data.label(i);
    const std::uint8_t* b = data.label(j);
    for (std::size_t k = 0; k < data.num_classes; ++k)
        if (a[k] && b[k]) return true;
    return false;
}

constexpr int kSampleRetries = 100;

}  // namespace

std::vector<Triplet> sample_triplets(const Dataset& data, std::size_t batch_size, Rng& rng) {
    if (data.num_items < 3) throw SamplingError("dataset too small to form triplets");
    std::vector<Triplet> batch;
    batch.reserve(batch_size);
    for (std::size_t t = 0; t < batch_size; ++t) {
        std::size_t anchor = rng.index(data.num_items);
        std::size_t pos = anchor;
        bool found = false;
        for (int r = 0; r < kSampleRetries; ++r) {
            std::size_t j = rng.index(data.num_items);
            if (j != anchor && shares_label(data, anchor, j)) {
                pos = j;
                found = true;
                break;
            }
        }
        if (!found) throw SamplingError("no positive found for anchor " + std::to_string(anchor));
        std::size_t neg = anchor;
        found = false;
        for (int r = 0; r < kSampleRetries; ++r) {
            std::size_t j = rng.index(data.num_items);
            if (!shares_label(data, anchor, j)) {
                neg = j;
                found = true;
                break;
            }
        }
        if (!found) throw SamplingError("no negative found for anchor " + std::to_string(anchor));
        batch.push_back(Triplet{anchor, pos, neg});
    }
    return batch;
}

namespace {

// Forward state for one dataset item: activations of the feature stack
// (acts[0] is the input, acts.back() the representation), hash activation,
// classifier logits.
struct ItemForward {
    std::vector<Vec> acts;
    HashActivation h;
    Vec logits;

    const Vec& rep() const { return acts.back(); }
};

ItemForward forward_item(const ModelParams& params, const Dataset& data, std::size_t idx) {
    ItemForward f;
    f.acts.emplace_back(data.feature(idx), data.feature(idx) + data.feature_dim);
    for (std::size_t l = 0; l < params.feature_layers.size(); ++l) {
        const AffineLayer& layer = params.feature_layers[l];
        Vec z = affine_forward(layer.weight, layer.bias, f.acts.back());
        if (l + 1 < params.feature_layers.size())
            for (double& v : z) v = std::tanh(v);
        f.acts.push_back(std::move(z));
    }
    f.h = forward_hash(params, f.rep());
    f.logits = affine_forward(params.classifier_weight, params.classifier_bias, f.rep());
    return f;
}

// Adds d_h (gradient at the hash activation) and d_logits contributions of
// one member occurrence into g, chaining through sigmoid, the two heads,
// and the feature stack. Either pointer may be null.
void accumulate_occurrence(const ModelParams& params, const ItemForward& f, const Vec* d_h,
                           const Vec* d_logits, GradientSet& g) {
    std::size_t d_f = params.rep_dim();
    std::size_t q = params.code_length();
    std::size_t c = params.num_classes();
    const Vec& rep = f.rep();
    Vec drep(d_f, 0.0);

    if (d_h) {
        Vec dz(q);
        for (std::size_t k = 0; k < q; ++k) {
            double h = f.h.values[k];
            dz[k] = (*d_h)[k] * h * (1.0 - h);
        }
        for (std::size_t i = 0; i < d_f; ++i) {
            kernels::axpy(rep[i], dz.data(), g.hash_weight.row(i), q);
            drep[i] += kernels::dot(params.hash_weight.row(i), dz.data(), q);
        }
        kernels::axpy(1.0, dz.data(), g.hash_bias.data(), q);
    }
    if (d_logits) {
        for (std::size_t i = 0; i < d_f; ++i) {
            kernels::axpy(rep[i], d_logits->data(), g.classifier_weight.row(i), c);
            drep[i] += kernels::dot(params.classifier_weight.row(i), d_logits->data(), c);
        }
        kernels::axpy(1.0, d_logits->data(), g.classifier_bias.data(), c);
    }

    Vec da = std::move(drep);
    for (std::size_t l = params.feature_layers.size(); l-- > 0;) {
        const AffineLayer& layer = params.feature_layers[l];
        const Vec& a_in = f.acts[l];
        const Vec& a_out = f.acts[l + 1];
        std::size_t out = layer.weight.cols;
        Vec dz = std::move(da);
        if (l + 1 < params.feature_layers.size())
            for (std::size_t j = 0; j < out; ++j) dz[j] *= 1.0 - a_out[j] * a_out[j];
        AffineLayer& lg = g.feature_layers[l];
        for (std::size_t i = 0; i < a_in.size(); ++i)
            kernels::axpy(a_in[i], dz.data(), lg.weight.row(i), out);
        kernels::axpy(1.0, dz.data(), lg.bias.data(), out);
        if (l > 0) {
            da.assign(a_in.size(), 0.0);
            for (std::size_t i = 0; i < a_in.size(); ++i)
                da[i] = kernels::dot(layer.weight.row(i), dz.data(), out);
        }
    }
}

}  // namespace

BatchGradients backward_full(const ModelParams& params, const Dataset& data,
                             const std::vector<Triplet>& batch, const TrainConfig& cfg) {
    require_dims(!batch.empty(), "triplet batch must be nonempty");
    require_dims(params.input_dim() == data.feature_dim, "model input vs dataset feature dim");
    require_dims(params.num_classes() == data.num_classes, "model classes vs dataset classes");

    std::size_t q = params.code_length();
    std::size_t c = params.num_classes();
    double m = static_cast<double>(batch.size());
    double inv_m = 1.0 / m;
    double scale_c = cfg.loss_balance / (3.0 * m);
    LossConfig lcfg{cfg.margin};

    BatchGradients out;
    out.grads = GradientSet::zeros_like(params);
    std::unordered_map<std::size_t, ItemForward> cache;
    auto fwd = [&](std::size_t idx) -> const ItemForward& {
        auto it = cache.find(idx);
        if (it == cache.end()) it = cache.emplace(idx, forward_item(params, data, idx)).first;
        return it->second;
    };

    std::size_t active = 0;
    double sum_jr = 0.0;
    double sum_jc = 0.0;
    for (const Triplet& t : batch) {
        const ItemForward& fa = fwd(t.anchor_idx);
        const ItemForward& fp = fwd(t.positive_idx);
        const ItemForward& fn = fwd(t.negative_idx);
        Vec w_row = class_weight_row(params, data.label(t.anchor_idx), c);

        double jr = triplet_loss(lcfg, w_row, fa.h, fp.h, fn.h);
        sum_jr += jr;
        TripletGradients tg =
            triplet_grads(lcfg, w_row, fa.h, fp.h, fn.h, data.label(t.anchor_idx), c);
        bool hinge_active = jr > 0.0;
        if (hinge_active) {
            ++active;
            for (std::size_t k = 0; k < q; ++k) {
                tg.d_anchor[k] *= inv_m;
                tg.d_positive[k] *= inv_m;
                tg.d_negative[k] *= inv_m;
            }
            if (!cfg.freeze_class_weights)
                kernels::axpy(inv_m, tg.d_weights.data.data(), out.grads.class_weights.data.data(),
                              tg.d_weights.size());
        }

        const std::size_t idxs[3] = {t.anchor_idx, t.positive_idx, t.negative_idx};
        const ItemForward* fwds[3] = {&fa, &fp, &fn};
        Vec* d_hs[3] = {&tg.d_anchor, &tg.d_positive, &tg.d_negative};
        for (int r = 0; r < 3; ++r) {
            sum_jc += softmax_xent_loss(fwds[r]->logits, data.label(idxs[r]), c);
            Vec dl;
            if (cfg.loss_balance > 0.0) {
                dl = softmax_logit_grad(fwds[r]->logits, data.label(idxs[r]), c);
                for (double& v : dl) v *= scale_c;
            }
            accumulate_occurrence(params, *fwds[r], hinge_active ? d_hs[r] : nullptr,
                                  dl.empty() ? nullptr : &dl, out.grads);
        }
    }

    out.triplet_loss = sum_jr * inv_m;
    out.class_loss = sum_jc / (3.0 * m);
    out.active_fraction = static_cast<double>(active) * inv_m;
    return out;
}

namespace {

void decay_update(Vec& param, const Vec& grad, double lr, double wd) {
    for (std::size_t i = 0; i < param.size(); ++i)
        param[i] -= lr * (grad[i] + wd * param[i]);
}

bool all_finite(const Vec& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace

ModelParams sgd_step(const ModelParams& params, const GradientSet& grads, std::size_t step,
                     const TrainConfig& cfg) {
    double lr = learning_rate(cfg, step);
    double wd = cfg.weight_decay;
    ModelParams p = params;
    require_dims(p.feature_layers.size() == grads.feature_layers.size(), "gradient layer count");
    for (std::size_t l = 0; l < p.feature_layers.size(); ++l) {
        decay_update(p.feature_layers[l].weight.data, grads.feature_layers[l].weight.data, lr, wd);
        decay_update(p.feature_layers[l].bias, grads.feature_layers[l].bias, lr, wd);
    }
    decay_update(p.hash_weight.data, grads.hash_weight.data, lr, wd);
    decay_update(p.hash_bias, grads.hash_bias, lr, wd);
    decay_update(p.classifier_weight.data, grads.classifier_weight.data, lr, wd);
    decay_update(p.classifier_bias, grads.classifier_bias, lr, wd);
    // class weights: plain step, no decay, then projection onto W >= 0
    if (!cfg.freeze_class_weights) {
        for (std::size_t i = 0; i < p.class_weights.size(); ++i) {
            double v = p.class_weights.data[i] - lr * grads.class_weights.data[i];
            p.class_weights.data[i] = v > 0.0 ? v : 0.0;
        }
    }

    bool ok = all_finite(p.hash_bias) && all_finite(p.classifier_bias) &&
              all_finite(p.hash_weight.data) && all_finite(p.classifier_weight.data) &&
              all_finite(p.class_weights.data);
    for (const AffineLayer& l : p.feature_layers)
        ok = ok && all_finite(l.weight.data) && all_finite(l.bias);
    if (!ok) throw DivergenceError("non-finite parameter after update", step);
    return p;
}

TrainResult train(const ModelParams& start, const Dataset& data, const TrainConfig& cfg,
                  const StepObserver& observer) {
    validate_train_config(cfg);
    validate_dataset(data);
    require_dims(start.input_dim() == data.feature_dim, "model input vs dataset feature dim");
    require_dims(start.num_classes() == data.num_classes, "model classes vs dataset classes");

    TrainResult result{start, TrainReport{}};
    Rng rng(cfg.seed);
    std::vector<double> combined;
    combined.reserve(cfg.max_steps);

    for (std::size_t step = 0; step < cfg.max_steps; ++step) {
        std::vector<Triplet> batch = sample_triplets(data, cfg.batch_size, rng);
        BatchGradients bg = backward_full(result.params, data, batch, cfg);
        if (!std::isfinite(bg.triplet_loss) || !std::isfinite(bg.class_loss))
            throw DivergenceError("non-finite loss", step);
        result.params = sgd_step(result.params, bg.grads, step, cfg);

        result.report.triplet_loss.push_back(bg.triplet_loss);
        result.report.class_loss.push_back(bg.class_loss);
        result.report.lr.push_back(learning_rate(cfg, step));
        result.report.active_fraction.push_back(bg.active_fraction);
        result.report.steps = step + 1;
        if (observer) observer(step, result.params);

        combined.push_back(bg.triplet_loss + cfg.loss_balance * bg.class_loss);
        std::size_t w = cfg.convergence_window;
        if (cfg.convergence_tol > 0.0 && combined.size() >= 2 * w) {
            double recent = 0.0;
            double older = 0.0;
            for (std::size_t i = 0; i < w; ++i) {
                recent += combined[combined.size() - 1 - i];
                older += combined[combined.size() - 1 - w - i];
            }
            if (std::abs(recent - older) / static_cast<double>(w) < cfg.convergence_tol) {
                result.report.converged = true;
                break;
            }
        }
    }
    return result;
}

}  // namespace qdwh
