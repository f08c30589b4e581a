#include "qdwh/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qdwh/error.hpp"
#include "qdwh/kernels.hpp"

namespace qdwh {

void validate_dataset(const Dataset& ds) {
    require_dims(ds.features.size() == ds.num_items * ds.feature_dim, "feature matrix size");
    require_dims(ds.labels.size() == ds.num_items * ds.num_classes, "label matrix size");
    for (std::size_t i = 0; i < ds.num_items; ++i) {
        const std::uint8_t* y = ds.label(i);
        bool any = false;
        for (std::size_t j = 0; j < ds.num_classes; ++j) {
            if (y[j] > 1) throw DimensionError("label entries must be 0 or 1");
            any = any || y[j] == 1;
        }
        if (!any) throw LabelError("item " + std::to_string(i) + " has no positive label");
    }
}

ModelParams init_params(const std::vector<std::size_t>& dims, std::size_t q, std::size_t c,
                        std::uint64_t seed) {
    if (dims.empty()) throw DimensionError("dims must be nonempty");
    for (std::size_t d : dims) {
        if (d == 0) throw DimensionError("layer size 0 in dims");
    }
    if (q < 1) throw DimensionError("code length must be >= 1");
    if (c < 2) throw DimensionError("need at least 2 classes");

    Rng rng(seed);
    auto init_affine = [&rng](std::size_t in, std::size_t out) {
        AffineLayer layer;
        layer.weight = Matrix(in, out);
        double scale = 1.0 / std::sqrt(static_cast<double>(in));
        for (double& w : layer.weight.data) w = rng.normal() * scale;
        layer.bias.assign(out, 0.0);
        return layer;
    };

    ModelParams p;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        p.feature_layers.push_back(init_affine(dims[l], dims[l + 1]));
    }
    std::size_t d_f = dims.back();
    AffineLayer hash = init_affine(d_f, q);
    p.hash_weight = std::move(hash.weight);
    p.hash_bias = std::move(hash.bias);
    p.class_weights = Matrix(c, q, 1.0);
    AffineLayer cls = init_affine(d_f, c);
    p.classifier_weight = std::move(cls.weight);
    p.classifier_bias = std::move(cls.bias);
    return p;
}

Vec affine_forward(const Matrix& weight, const Vec& bias, const Vec& x) {
    require_dims(x.size() == weight.rows, "affine input length");
    require_dims(bias.size() == weight.cols, "affine bias length");
    Vec out = bias;
    for (std::size_t i = 0; i < weight.rows; ++i) {
        kernels::axpy(x[i], weight.row(i), out.data(), weight.cols);
    }
    return out;
}

Vec forward_features(const ModelParams& params, const Vec& x) {
    require_dims(x.size() == params.input_dim(), "feature input length");
    Vec a = x;
    for (std::size_t l = 0; l < params.feature_layers.size(); ++l) {
        const AffineLayer& layer = params.feature_layers[l];
        Vec z = affine_forward(layer.weight, layer.bias, a);
        if (l + 1 < params.feature_layers.size()) {
            for (double& v : z) v = std::tanh(v);
        }
        a = std::move(z);
    }
    return a;
}

double sigmoid_stable(double z) {
    double h;
    if (z >= 0.0) {
        h = 1.0 / (1.0 + std::exp(-z));
    } else {
        double e = std::exp(z);
        h = e / (1.0 + e);
    }
    // keep the open interval even where the true value rounds to 0 or 1
    constexpr double lo = std::numeric_limits<double>::min();
    const double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2;
    return std::clamp(h, lo, hi);
}

HashActivation forward_hash(const ModelParams& params, const Vec& rep) {
    Vec z = affine_forward(params.hash_weight, params.hash_bias, rep);
    for (double& v : z) v = sigmoid_stable(v);
    return HashActivation{std::move(z)};
}

ClassProbabilities forward_class_probs(const ModelParams& params, const Vec& rep) {
    Vec logits = affine_forward(params.classifier_weight, params.classifier_bias, rep);
    double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double& v : logits) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (double& v : logits) v /= sum;
    return ClassProbabilities{std::move(logits)};
}

std::vector<std::uint8_t> binarize(const HashActivation& h) {
    std::vector<std::uint8_t> bits(h.values.size());
    for (std::size_t k = 0; k < bits.size(); ++k) bits[k] = h.values[k] >= 0.5 ? 1 : 0;
    return bits;
}

std::size_t param_count(const ModelParams& params) {
    std::size_t n = 0;
    for (const AffineLayer& l : params.feature_layers) n += l.weight.data.size() + l.bias.size();
    n += params.hash_weight.data.size() + params.hash_bias.size();
    n += params.class_weights.data.size();
    n += params.classifier_weight.data.size() + params.classifier_bias.size();
    return n;
}

Vec flatten_params(const ModelParams& params) {
    Vec flat;
    flat.reserve(param_count(params));
    auto push = [&flat](const Vec& v) { flat.insert(flat.end(), v.begin(), v.end()); };
    for (const AffineLayer& l : params.feature_layers) {
        push(l.weight.data);
        push(l.bias);
    }
    push(params.hash_weight.data);
    push(params.hash_bias);
    push(params.class_weights.data);
    push(params.classifier_weight.data);
    push(params.classifier_bias);
    return flat;
}

ModelParams unflatten_params(const ModelParams& shape, const Vec& flat) {
    require_dims(flat.size() == param_count(shape), "flat parameter length");
    ModelParams p = shape;
    std::size_t pos = 0;
    auto pull = [&flat, &pos](Vec& v) {
        std::copy(flat.begin() + pos, flat.begin() + pos + v.size(), v.begin());
        pos += v.size();
    };
    for (AffineLayer& l : p.feature_layers) {
        pull(l.weight.data);
        pull(l.bias);
    }
    pull(p.hash_weight.data);
    pull(p.hash_bias);
    pull(p.class_weights.data);
    pull(p.classifier_weight.data);
    pull(p.classifier_bias);
    return p;
}

Vec class_weight_row(const ModelParams& params, const std::uint8_t* label, std::size_t c) {
    require_dims(c == params.num_classes(), "label length");
    std::size_t q = params.code_length();
    Vec row(q, 0.0);
    std::size_t count = 0;
    for (std::size_t i = 0; i < c; ++i) {
        if (!label[i]) continue;
        kernels::axpy(1.0, params.class_weights.row(i), row.data(), q);
        ++count;
    }
    if (count == 0) throw LabelError("label has no positive entry");
    if (count > 1) {
        double inv = 1.0 / static_cast<double>(count);
        for (double& v : row) v *= inv;
    }
    return row;
}

}  // namespace qdwh
