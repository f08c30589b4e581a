#include "qdwh/synth.hpp"

#include <cmath>

#include "qdwh/error.hpp"
#include "qdwh/rng.hpp"

namespace qdwh {

Dataset gen_synth(std::size_t n, std::size_t d, std::size_t c, double multi_label_prob,
                  double noise_sigma, std::uint64_t seed) {
    if (c < 2) throw ArgumentError("need at least 2 classes");
    if (n < c) throw ArgumentError("need at least one item per class");
    if (d < 2) throw ArgumentError("feature dimension must be >= 2");
    if (!(multi_label_prob >= 0.0 && multi_label_prob <= 1.0))
        throw ArgumentError("multi_label_prob must lie in [0,1]");
    if (!(noise_sigma >= 0.0)) throw ArgumentError("noise_sigma must be >= 0");

    Rng rng(seed);
    double radius = noise_sigma > 0.0 ? 4.0 * noise_sigma : 1.0;

    std::vector<Vec> centers(c, Vec(d));
    for (std::size_t i = 0; i < c; ++i) {
        double norm = 0.0;
        do {
            for (double& v : centers[i]) v = rng.normal();
            norm = 0.0;
            for (double v : centers[i]) norm += v * v;
        } while (norm == 0.0);
        norm = std::sqrt(norm);
        for (double& v : centers[i]) v = v / norm * radius;
    }

    Dataset ds;
    ds.num_items = n;
    ds.feature_dim = d;
    ds.num_classes = c;
    ds.features.resize(n * d);
    ds.labels.assign(n * c, 0);

    for (std::size_t i = 0; i < n; ++i) {
        std::size_t cluster = i % c;
        double* x = ds.features.data() + i * d;
        for (std::size_t j = 0; j < d; ++j)
            x[j] = centers[cluster][j] + noise_sigma * rng.normal();
        ds.labels[i * c + cluster] = 1;

        bool extra = rng.uniform() < multi_label_prob;
        if (extra) {
            // second-nearest center to the noisy point, ties by index
            std::size_t best = 0;
            std::size_t second = 0;
            double best_d = -1.0;
            double second_d = -1.0;
            for (std::size_t k = 0; k < c; ++k) {
                double dist = 0.0;
                for (std::size_t j = 0; j < d; ++j) {
                    double diff = x[j] - centers[k][j];
                    dist += diff * diff;
                }
                if (best_d < 0.0 || dist < best_d) {
                    second = best;
                    second_d = best_d;
                    best = k;
                    best_d = dist;
                } else if (second_d < 0.0 || dist < second_d) {
                    second = k;
                    second_d = dist;
                }
            }
            ds.labels[i * c + second] = 1;
        }
    }
    return ds;
}

}  // namespace qdwh
