#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <vector>

#include "qdwh/error.hpp"
#include "qdwh/model.hpp"
#include "qdwh/synth.hpp"

using namespace qdwh;

namespace {

std::size_t label_count(const Dataset& ds, std::size_t i) {
    std::size_t n = 0;
    for (std::size_t j = 0; j < ds.num_classes; ++j) n += ds.label(i)[j];
    return n;
}

double dist2(const double* a, const double* b, std::size_t d) {
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
        double diff = a[k] - b[k];
        s += diff * diff;
    }
    return s;
}

}  // namespace

TEST_CASE("gen_synth produces a valid dataset of the requested shape") {
    Dataset ds = gen_synth(30, 4, 3, 0.3, 0.5, 111);
    CHECK(ds.num_items == 30);
    CHECK(ds.feature_dim == 4);
    CHECK(ds.num_classes == 3);
    CHECK_NOTHROW(validate_dataset(ds));
    for (std::size_t i = 0; i < ds.num_items; ++i) {
        std::size_t n = label_count(ds, i);
        CHECK(n >= 1);
        CHECK(n <= 2);
    }
}

TEST_CASE("gen_synth assigns base labels round-robin") {
    Dataset ds = gen_synth(12, 3, 4, 0.0, 0.2, 112);
    for (std::size_t i = 0; i < 12; ++i) {
        CHECK(ds.label(i)[i % 4] == 1);
    }
}

TEST_CASE("gen_synth with zero multilabel probability yields single labels only") {
    Dataset ds = gen_synth(40, 4, 3, 0.0, 0.5, 113);
    for (std::size_t i = 0; i < ds.num_items; ++i) CHECK(label_count(ds, i) == 1);
}

TEST_CASE("gen_synth with probability one adds a second label wherever it is distinct") {
    // With zero noise the nearest center is always the item's own, so the
    // second-nearest differs and every item carries exactly two labels.
    Dataset exact = gen_synth(40, 4, 3, 1.0, 0.0, 114);
    for (std::size_t i = 0; i < exact.num_items; ++i) CHECK(label_count(exact, i) == 2);
    // With noise an item can drift past another center; the second-nearest
    // is then its own cluster and the label set stays single.
    Dataset noisy = gen_synth(40, 4, 3, 1.0, 0.5, 114);
    std::size_t doubles = 0;
    for (std::size_t i = 0; i < noisy.num_items; ++i) {
        std::size_t count = label_count(noisy, i);
        CHECK(count >= 1);
        CHECK(count <= 2);
        doubles += count == 2;
    }
    CHECK(doubles > 20);
}

TEST_CASE("gen_synth with zero noise puts every item on its own center") {
    Dataset ds = gen_synth(20, 3, 4, 0.0, 0.0, 115);
    Vec origin(3, 0.0);
    for (std::size_t i = 0; i < ds.num_items; ++i) {
        // Centers live on the unit sphere when sigma is 0.
        CHECK(dist2(ds.feature(i), origin.data(), 3) == doctest::Approx(1.0).epsilon(1e-9));
        // Same cluster, same point.
        if (i + 4 < ds.num_items) {
            CHECK(dist2(ds.feature(i), ds.feature(i + 4), 3) == 0.0);
        }
    }
    // Different clusters occupy different points.
    CHECK(dist2(ds.feature(0), ds.feature(1), 3) > 1e-6);
}

TEST_CASE("gen_synth is deterministic in the seed") {
    Dataset a = gen_synth(25, 4, 3, 0.4, 0.3, 116);
    Dataset b = gen_synth(25, 4, 3, 0.4, 0.3, 116);
    Dataset c = gen_synth(25, 4, 3, 0.4, 0.3, 117);
    CHECK(a.features == b.features);
    CHECK(a.labels == b.labels);
    CHECK(a.features != c.features);
}

TEST_CASE("gen_synth second label is the second-nearest center") {
    // Recover the centers from a zero-noise run with the same seed: item i
    // of that run sits exactly on center i % c.
    std::uint64_t seed = 118;
    std::size_t d = 5, c = 4, n = 60;
    Dataset centers_ds = gen_synth(c, d, c, 0.0, 0.0, seed);
    Dataset noiseless = gen_synth(n, d, c, 1.0, 0.0, seed);
    // With zero noise the nearest center is the item's own, so the second
    // label must be the nearest OTHER center.
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t base = i % c;
        REQUIRE(noiseless.label(i)[base] == 1);
        std::size_t second = c;
        for (std::size_t j = 0; j < c; ++j) {
            if (j != base && noiseless.label(i)[j] == 1) second = j;
        }
        REQUIRE(second < c);
        double got = dist2(noiseless.feature(i), centers_ds.feature(second), d);
        for (std::size_t j = 0; j < c; ++j) {
            if (j == base) continue;
            double dj = dist2(noiseless.feature(i), centers_ds.feature(j), d);
            CHECK(got <= dj + 1e-12);
        }
    }
}

TEST_CASE("gen_synth noise scales with sigma") {
    std::size_t d = 4, c = 2, n = 100;
    Dataset tight = gen_synth(n, d, c, 0.0, 0.01, 119);
    Dataset loose = gen_synth(n, d, c, 0.0, 1.0, 119);
    // Mean squared distance of items from their cluster's mean grows with
    // sigma (centers differ between the runs, so compare spread not place).
    auto spread = [&](const Dataset& ds) {
        double total = 0.0;
        for (std::size_t cl = 0; cl < c; ++cl) {
            Vec mean(d, 0.0);
            std::size_t count = 0;
            for (std::size_t i = cl; i < n; i += c) {
                for (std::size_t k = 0; k < d; ++k) mean[k] += ds.feature(i)[k];
                ++count;
            }
            for (double& m : mean) m /= static_cast<double>(count);
            for (std::size_t i = cl; i < n; i += c) total += dist2(ds.feature(i), mean.data(), d);
        }
        return total / static_cast<double>(n);
    };
    CHECK(spread(tight) < spread(loose) / 100.0);
}

TEST_CASE("gen_synth validates its arguments") {
    CHECK_THROWS_AS(gen_synth(1, 4, 2, 0.0, 0.5, 1), ArgumentError);   // n < c
    CHECK_THROWS_AS(gen_synth(10, 1, 2, 0.0, 0.5, 1), ArgumentError);  // d too small
    CHECK_THROWS_AS(gen_synth(10, 4, 1, 0.0, 0.5, 1), ArgumentError);  // c too small
    CHECK_THROWS_AS(gen_synth(10, 4, 2, -0.1, 0.5, 1), ArgumentError);
    CHECK_THROWS_AS(gen_synth(10, 4, 2, 1.1, 0.5, 1), ArgumentError);
    CHECK_THROWS_AS(gen_synth(10, 4, 2, 0.0, -0.5, 1), ArgumentError);
}
