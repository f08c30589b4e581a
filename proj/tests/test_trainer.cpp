#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "qdwh/error.hpp"
#include "qdwh/loss.hpp"
#include "qdwh/model.hpp"
#include "qdwh/rng.hpp"
#include "qdwh/synth.hpp"
#include "qdwh/trainer.hpp"

using namespace qdwh;

namespace {

// Two tight clusters, labels 0 and 1, alternating.
Dataset two_cluster_dataset(std::size_t n) {
    Dataset ds;
    ds.num_items = n;
    ds.feature_dim = 2;
    ds.num_classes = 2;
    ds.features.resize(n * 2);
    ds.labels.resize(n * 2);
    Rng rng(99);
    for (std::size_t i = 0; i < n; ++i) {
        double cx = i % 2 == 0 ? 1.0 : -1.0;
        ds.features[i * 2] = cx + 0.05 * rng.normal();
        ds.features[i * 2 + 1] = -cx + 0.05 * rng.normal();
        ds.labels[i * 2] = i % 2 == 0 ? 1 : 0;
        ds.labels[i * 2 + 1] = i % 2 == 0 ? 0 : 1;
    }
    return ds;
}

bool share_label(const Dataset& ds, std::size_t i, std::size_t j) {
    for (std::size_t k = 0; k < ds.num_classes; ++k) {
        if (ds.label(i)[k] && ds.label(j)[k]) return true;
    }
    return false;
}

Vec grads_to_flat(const ModelParams& shape, const GradientSet& g) {
    ModelParams p = shape;
    p.feature_layers = g.feature_layers;
    p.hash_weight = g.hash_weight;
    p.hash_bias = g.hash_bias;
    p.class_weights = g.class_weights;
    p.classifier_weight = g.classifier_weight;
    p.classifier_bias = g.classifier_bias;
    return flatten_params(p);
}

// Batch objective recomputed from scratch: mean ranking loss plus
// loss_balance * mean classification loss over every triplet member.
double batch_loss(const ModelParams& params, const Dataset& data,
                  const std::vector<Triplet>& batch, const TrainConfig& cfg) {
    LossConfig lc{cfg.margin};
    double jr = 0.0, jc = 0.0;
    for (const Triplet& t : batch) {
        std::size_t idx[3] = {t.anchor_idx, t.positive_idx, t.negative_idx};
        HashActivation h[3];
        for (int r = 0; r < 3; ++r) {
            Vec x(data.feature(idx[r]), data.feature(idx[r]) + data.feature_dim);
            Vec rep = forward_features(params, x);
            h[r] = forward_hash(params, rep);
            Vec logits = affine_forward(params.classifier_weight, params.classifier_bias, rep);
            jc += softmax_xent_loss(logits, data.label(idx[r]), data.num_classes);
        }
        Vec w_row = class_weight_row(params, data.label(t.anchor_idx), data.num_classes);
        jr += triplet_loss(lc, w_row, h[0], h[1], h[2]);
    }
    double m = static_cast<double>(batch.size());
    return jr / m + cfg.loss_balance * jc / (3.0 * m);
}

}  // namespace

TEST_CASE("validate_train_config rejects out-of-range settings") {
    TrainConfig ok;
    CHECK_NOTHROW(validate_train_config(ok));
    TrainConfig bad;
    bad.batch_size = 0;
    CHECK_THROWS_AS(validate_train_config(bad), ArgumentError);
    bad = ok;
    bad.initial_lr = 0.0;
    CHECK_THROWS_AS(validate_train_config(bad), ArgumentError);
    bad = ok;
    bad.lr_drop_factor = 0.5;
    CHECK_THROWS_AS(validate_train_config(bad), ArgumentError);
    bad = ok;
    bad.lr_drop_every = 0;
    CHECK_THROWS_AS(validate_train_config(bad), ArgumentError);
    bad = ok;
    bad.weight_decay = -1e-6;
    CHECK_THROWS_AS(validate_train_config(bad), ArgumentError);
    bad = ok;
    bad.margin = 0.0;
    CHECK_THROWS_AS(validate_train_config(bad), ArgumentError);
    bad = ok;
    bad.loss_balance = -0.1;
    CHECK_THROWS_AS(validate_train_config(bad), ArgumentError);
    bad = ok;
    bad.convergence_window = 0;
    CHECK_THROWS_AS(validate_train_config(bad), ArgumentError);
    bad = ok;
    bad.convergence_tol = -1.0;
    CHECK_THROWS_AS(validate_train_config(bad), ArgumentError);
}

TEST_CASE("learning_rate drops by the factor at every boundary") {
    TrainConfig cfg;
    cfg.initial_lr = 0.001;
    cfg.lr_drop_factor = 10.0;
    cfg.lr_drop_every = 2000;
    CHECK(learning_rate(cfg, 0) == 0.001);
    CHECK(learning_rate(cfg, 1999) == 0.001);
    CHECK(learning_rate(cfg, 2000) == 0.001 / 10.0);
    CHECK(learning_rate(cfg, 3999) == 0.001 / 10.0);
    CHECK(learning_rate(cfg, 4000) == 0.001 / 10.0 / 10.0);
    cfg.lr_drop_factor = 2.0;
    cfg.lr_drop_every = 3;
    CHECK(learning_rate(cfg, 8) == 0.001 / 2.0 / 2.0);
    cfg.lr_drop_factor = 1.0;
    CHECK(learning_rate(cfg, 5000) == 0.001);
}

TEST_CASE("sample_triplets draws valid triplets") {
    Dataset ds = two_cluster_dataset(12);
    Rng rng(5);
    std::vector<Triplet> batch = sample_triplets(ds, 32, rng);
    REQUIRE(batch.size() == 32);
    for (const Triplet& t : batch) {
        CHECK(t.anchor_idx < ds.num_items);
        CHECK(t.positive_idx < ds.num_items);
        CHECK(t.negative_idx < ds.num_items);
        CHECK(t.positive_idx != t.anchor_idx);
        CHECK(share_label(ds, t.anchor_idx, t.positive_idx));
        CHECK(!share_label(ds, t.anchor_idx, t.negative_idx));
    }
}

TEST_CASE("sample_triplets honors multilabel intersections") {
    // Labels: {0}, {0,1}, {1}, {2}, {2} -> item 2 shares with item 1 only,
    // and the two-label item 1 still finds item 3 or 4 as a negative.
    Dataset ds;
    ds.num_items = 5;
    ds.feature_dim = 1;
    ds.num_classes = 3;
    ds.features = {0.0, 1.0, 2.0, 3.0, 4.0};
    ds.labels = {1, 0, 0, 1, 1, 0, 0, 1, 0, 0, 0, 1, 0, 0, 1};
    Rng rng(6);
    std::vector<Triplet> batch = sample_triplets(ds, 64, rng);
    for (const Triplet& t : batch) {
        CHECK(share_label(ds, t.anchor_idx, t.positive_idx));
        CHECK(!share_label(ds, t.anchor_idx, t.negative_idx));
        if (t.anchor_idx == 2) CHECK(t.positive_idx == 1);
        if (t.anchor_idx == 1) CHECK(t.negative_idx >= 3);
    }
}

TEST_CASE("sample_triplets fails cleanly when no valid triplet exists") {
    Dataset single;
    single.num_items = 4;
    single.feature_dim = 1;
    single.num_classes = 2;
    single.features = {0.0, 1.0, 2.0, 3.0};
    single.labels = {1, 0, 1, 0, 1, 0, 1, 0};  // one class only: no negatives
    Rng rng(7);
    CHECK_THROWS_AS(sample_triplets(single, 8, rng), SamplingError);

    Dataset tiny;
    tiny.num_items = 2;
    tiny.feature_dim = 1;
    tiny.num_classes = 2;
    tiny.features = {0.0, 1.0};
    tiny.labels = {1, 0, 0, 1};
    CHECK_THROWS_AS(sample_triplets(tiny, 8, rng), SamplingError);
}

TEST_CASE("sample_triplets is deterministic in the generator state") {
    Dataset ds = two_cluster_dataset(10);
    Rng a(77), b(77);
    auto ba = sample_triplets(ds, 16, a);
    auto bb = sample_triplets(ds, 16, b);
    REQUIRE(ba.size() == bb.size());
    for (std::size_t i = 0; i < ba.size(); ++i) {
        CHECK(ba[i].anchor_idx == bb[i].anchor_idx);
        CHECK(ba[i].positive_idx == bb[i].positive_idx);
        CHECK(ba[i].negative_idx == bb[i].negative_idx);
    }
}

TEST_CASE("sgd_step leaves parameters alone under zero gradient and zero decay") {
    ModelParams p = init_params({3, 4}, 5, 2, 11);
    GradientSet g = GradientSet::zeros_like(p);
    TrainConfig cfg;
    cfg.weight_decay = 0.0;
    ModelParams next = sgd_step(p, g, 0, cfg);
    CHECK(flatten_params(next) == flatten_params(p));
}

TEST_CASE("sgd_step applies weight decay to everything except class_weights") {
    ModelParams p = init_params({3}, 4, 2, 12);
    p.class_weights.fill(0.8);
    GradientSet g = GradientSet::zeros_like(p);
    TrainConfig cfg;
    cfg.initial_lr = 0.1;
    cfg.weight_decay = 0.01;
    ModelParams next = sgd_step(p, g, 0, cfg);
    for (std::size_t i = 0; i < p.hash_weight.data.size(); ++i) {
        CHECK(next.hash_weight.data[i] ==
              doctest::Approx(p.hash_weight.data[i] * (1.0 - 0.1 * 0.01)).epsilon(1e-14));
    }
    for (double w : next.class_weights.data) CHECK(w == 0.8);
}

TEST_CASE("sgd_step projects class weights onto the nonnegative orthant") {
    ModelParams p = init_params({3}, 2, 2, 13);
    p.class_weights.fill(0.1);
    GradientSet g = GradientSet::zeros_like(p);
    g.class_weights.fill(100.0);
    TrainConfig cfg;
    cfg.initial_lr = 0.01;
    ModelParams next = sgd_step(p, g, 0, cfg);
    // 0.1 - 0.01*100 = -0.9, projected to 0 rather than stepping negative.
    for (double w : next.class_weights.data) CHECK(w == 0.0);
}

TEST_CASE("sgd_step with frozen class weights ignores their gradient") {
    ModelParams p = init_params({3}, 2, 2, 14);
    GradientSet g = GradientSet::zeros_like(p);
    g.class_weights.fill(5.0);
    TrainConfig cfg;
    cfg.freeze_class_weights = true;
    ModelParams next = sgd_step(p, g, 0, cfg);
    for (double w : next.class_weights.data) CHECK(w == 1.0);
}

TEST_CASE("sgd_step uses the scheduled learning rate for its step index") {
    ModelParams p = init_params({2}, 2, 2, 15);
    GradientSet g = GradientSet::zeros_like(p);
    g.hash_bias.assign(2, 1.0);
    TrainConfig cfg;
    cfg.initial_lr = 0.5;
    cfg.lr_drop_factor = 10.0;
    cfg.lr_drop_every = 4;
    cfg.weight_decay = 0.0;
    ModelParams early = sgd_step(p, g, 0, cfg);
    ModelParams late = sgd_step(p, g, 4, cfg);
    CHECK(early.hash_bias[0] == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(late.hash_bias[0] == doctest::Approx(-0.05).epsilon(1e-15));
}

TEST_CASE("backward_full returns exact zeros when nothing is active") {
    // Saturating hash weights separate the two clusters perfectly, so with a
    // tiny margin every hinge is inactive; with a zero classification weight
    // the whole gradient must vanish identically.
    Dataset ds = two_cluster_dataset(8);
    ModelParams p = init_params({2}, 1, 2, 16);
    p.hash_weight(0, 0) = 60.0;
    p.hash_weight(1, 0) = -60.0;
    TrainConfig cfg;
    cfg.margin = 1e-9;
    cfg.loss_balance = 0.0;
    Rng rng(17);
    std::vector<Triplet> batch = sample_triplets(ds, 16, rng);
    BatchGradients bg = backward_full(p, ds, batch, cfg);
    CHECK(bg.active_fraction == 0.0);
    CHECK(bg.triplet_loss == 0.0);
    Vec flat = grads_to_flat(p, bg.grads);
    for (double v : flat) CHECK(v == 0.0);
}

TEST_CASE("backward_full gradient matches central differences of the batch objective") {
    Dataset ds = gen_synth(12, 3, 3, 0.3, 0.4, 21);
    ModelParams p = init_params({3, 5, 4}, 4, 3, 22);
    // Move class weights off the all-ones point so their gradient is generic.
    Rng rng(23);
    for (double& w : p.class_weights.data) w = 0.5 + rng.uniform();
    TrainConfig cfg;
    cfg.margin = 1.0;
    cfg.loss_balance = 0.7;
    std::vector<Triplet> batch = sample_triplets(ds, 6, rng);
    BatchGradients bg = backward_full(p, ds, batch, cfg);
    Vec analytic = grads_to_flat(p, bg.grads);
    auto fn = [&](const Vec& flat) {
        return batch_loss(unflatten_params(p, flat), ds, batch, cfg);
    };
    CHECK(finite_diff_check(fn, flatten_params(p), analytic, 1e-6) < 1e-5);
}

TEST_CASE("backward_full with frozen class weights zeroes their gradient slot") {
    Dataset ds = gen_synth(12, 3, 3, 0.0, 0.4, 24);
    ModelParams p = init_params({3, 4}, 4, 3, 25);
    TrainConfig cfg;
    cfg.freeze_class_weights = true;
    Rng rng(26);
    std::vector<Triplet> batch = sample_triplets(ds, 8, rng);
    BatchGradients bg = backward_full(p, ds, batch, cfg);
    for (double v : bg.grads.class_weights.data) CHECK(v == 0.0);
}

TEST_CASE("backward_full batch means are invariant to duplicating the batch") {
    Dataset ds = gen_synth(10, 3, 2, 0.0, 0.4, 27);
    ModelParams p = init_params({3, 4}, 4, 2, 28);
    TrainConfig cfg;
    Rng rng(29);
    std::vector<Triplet> batch = sample_triplets(ds, 4, rng);
    std::vector<Triplet> doubled = batch;
    doubled.insert(doubled.end(), batch.begin(), batch.end());
    BatchGradients a = backward_full(p, ds, batch, cfg);
    BatchGradients b = backward_full(p, ds, doubled, cfg);
    CHECK(a.triplet_loss == doctest::Approx(b.triplet_loss).epsilon(1e-12));
    CHECK(a.class_loss == doctest::Approx(b.class_loss).epsilon(1e-12));
    CHECK(a.active_fraction == doctest::Approx(b.active_fraction).epsilon(1e-12));
    Vec fa = grads_to_flat(p, a.grads);
    Vec fb = grads_to_flat(p, b.grads);
    for (std::size_t i = 0; i < fa.size(); ++i) {
        CHECK(fa[i] == doctest::Approx(fb[i]).epsilon(1e-12));
    }
}

TEST_CASE("train runs zero steps as a no-op") {
    Dataset ds = two_cluster_dataset(8);
    ModelParams p = init_params({2, 3}, 4, 2, 30);
    TrainConfig cfg;
    cfg.max_steps = 0;
    TrainResult r = train(p, ds, cfg);
    CHECK(r.report.steps == 0);
    CHECK(r.report.triplet_loss.empty());
    CHECK(flatten_params(r.params) == flatten_params(p));
}

TEST_CASE("train is bit-for-bit deterministic") {
    Dataset ds = gen_synth(24, 4, 3, 0.2, 0.3, 31);
    ModelParams p = init_params({4, 6}, 6, 3, 32);
    TrainConfig cfg;
    cfg.max_steps = 40;
    cfg.batch_size = 8;
    cfg.seed = 5;
    TrainResult a = train(p, ds, cfg);
    TrainResult b = train(p, ds, cfg);
    CHECK(flatten_params(a.params) == flatten_params(b.params));
    CHECK(a.report.triplet_loss == b.report.triplet_loss);
    CHECK(a.report.class_loss == b.report.class_loss);
    TrainConfig other = cfg;
    other.seed = 6;
    TrainResult c = train(p, ds, other);
    CHECK(flatten_params(a.params) != flatten_params(c.params));
}

TEST_CASE("train keeps class weights nonnegative at every step") {
    Dataset ds = gen_synth(24, 4, 3, 0.2, 0.3, 33);
    ModelParams p = init_params({4, 6}, 6, 3, 34);
    TrainConfig cfg;
    cfg.max_steps = 60;
    cfg.batch_size = 8;
    cfg.initial_lr = 0.05;  // aggressive enough to hit the projection
    std::size_t calls = 0;
    double min_seen = 1.0;
    TrainResult r = train(p, ds, cfg, [&](std::size_t, const ModelParams& cur) {
        ++calls;
        for (double w : cur.class_weights.data) min_seen = std::min(min_seen, w);
    });
    CHECK(calls == 60);
    CHECK(min_seen >= 0.0);
    CHECK(r.report.steps == 60);
    CHECK(r.report.lr.size() == 60);
    CHECK(r.report.active_fraction.size() == 60);
}

TEST_CASE("train reduces the combined loss on an easy problem") {
    Dataset ds = two_cluster_dataset(40);
    ModelParams p = init_params({2, 8}, 8, 2, 35);
    TrainConfig cfg;
    cfg.max_steps = 200;
    cfg.batch_size = 16;
    cfg.initial_lr = 0.02;
    TrainResult r = train(p, ds, cfg);
    auto mean_slice = [&](std::size_t lo, std::size_t hi) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            s += r.report.triplet_loss[i] + cfg.loss_balance * r.report.class_loss[i];
        }
        return s / static_cast<double>(hi - lo);
    };
    double head = mean_slice(0, 20);
    double tail = mean_slice(180, 200);
    CHECK(tail < head);
}

TEST_CASE("train stops early when the loss plateaus") {
    Dataset ds = two_cluster_dataset(40);
    ModelParams p = init_params({2, 8}, 8, 2, 36);
    TrainConfig cfg;
    cfg.max_steps = 5000;
    cfg.batch_size = 16;
    cfg.initial_lr = 0.02;
    cfg.convergence_window = 40;
    cfg.convergence_tol = 1e-3;
    TrainResult r = train(p, ds, cfg);
    CHECK(r.report.converged);
    CHECK(r.report.steps < 5000);
    CHECK(r.report.steps >= 80);  // needs two full windows of history
}

TEST_CASE("train throws DivergenceError when the parameters blow up") {
    Dataset ds = two_cluster_dataset(12);
    ModelParams p = init_params({2, 4}, 4, 2, 37);
    TrainConfig cfg;
    cfg.max_steps = 200;
    cfg.batch_size = 8;
    cfg.initial_lr = 1e18;
    cfg.weight_decay = 0.5;
    bool threw = false;
    try {
        train(p, ds, cfg);
    } catch (const DivergenceError& e) {
        threw = true;
        CHECK(e.step < cfg.max_steps);
        CHECK(std::string(e.what()).find("step") != std::string::npos);
    }
    CHECK(threw);
}

TEST_CASE("train validates its configuration up front") {
    Dataset ds = two_cluster_dataset(8);
    ModelParams p = init_params({2}, 4, 2, 38);
    TrainConfig cfg;
    cfg.batch_size = 0;
    CHECK_THROWS_AS(train(p, ds, cfg), ArgumentError);
}
