#include "qdwh/index.hpp"

#include <algorithm>
#include <string>

#include "qdwh/error.hpp"
#include "qdwh/kernels.hpp"

namespace qdwh {

std::size_t words_for(std::size_t q) { return (q + 63) / 64; }

void pack_bits(const std::uint8_t* bits, std::size_t q, std::uint64_t* words) {
    std::size_t w = words_for(q);
    std::fill(words, words + w, 0);
    for (std::size_t k = 0; k < q; ++k) {
        if (bits[k] > 1) throw ArgumentError("code bits must be 0 or 1");
        if (bits[k]) words[k / 64] |= std::uint64_t{1} << (k % 64);
    }
}

std::vector<std::uint8_t> unpack_bits(const std::uint64_t* words, std::size_t q) {
    std::vector<std::uint8_t> bits(q);
    for (std::size_t k = 0; k < q; ++k) bits[k] = (words[k / 64] >> (k % 64)) & 1u;
    return bits;
}

std::vector<std::uint64_t> pack_code(const std::vector<std::uint8_t>& bits) {
    std::vector<std::uint64_t> words(words_for(bits.size()), 0);
    pack_bits(bits.data(), bits.size(), words.data());
    return words;
}

BitCodeSet build_index(const std::vector<std::vector<std::uint8_t>>& codes) {
    BitCodeSet set;
    if (codes.empty()) return set;
    set.num_items = codes.size();
    set.code_length = codes.front().size();
    require_dims(set.code_length >= 1, "empty code");
    set.words_per_code = words_for(set.code_length);
    set.words.assign(set.num_items * set.words_per_code, 0);
    for (std::size_t i = 0; i < codes.size(); ++i) {
        require_dims(codes[i].size() == set.code_length, "codes must share one length");
        pack_bits(codes[i].data(), set.code_length, set.code(i));
    }
    return set;
}

std::vector<std::uint8_t> code_bytes(const BitCodeSet& set, std::size_t i) {
    if (i >= set.num_items) throw RangeError("item index out of range");
    std::size_t nb = set.bytes_per_code();
    std::vector<std::uint8_t> bytes(nb);
    const std::uint64_t* w = set.code(i);
    for (std::size_t b = 0; b < nb; ++b)
        bytes[b] = static_cast<std::uint8_t>(w[b / 8] >> (8 * (b % 8)));
    return bytes;
}

BitCodeSet codes_from_bytes(std::size_t n, std::size_t q, const std::vector<std::uint8_t>& bytes) {
    require_dims(q >= 1, "code length must be >= 1");
    std::size_t nb = (q + 7) / 8;
    require_dims(bytes.size() == n * nb, "byte buffer size");
    BitCodeSet set;
    set.num_items = n;
    set.code_length = q;
    set.words_per_code = words_for(q);
    set.words.assign(n * set.words_per_code, 0);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t* w = set.code(i);
        for (std::size_t b = 0; b < nb; ++b)
            w[b / 8] |= std::uint64_t{bytes[i * nb + b]} << (8 * (b % 8));
        // reject stray bits above q so padding invariants survive a read
        std::size_t used = q % 64;
        if (used != 0) {
            std::uint64_t mask = (std::uint64_t{1} << used) - 1;
            if (w[set.words_per_code - 1] & ~mask)
                throw ParseError("nonzero padding bits in code record " + std::to_string(i));
        }
    }
    return set;
}

std::uint32_t hamming_distance(const BitCodeSet& set, std::size_t i, std::size_t j) {
    if (i >= set.num_items || j >= set.num_items) throw RangeError("item index out of range");
    return kernels::hamming(set.code(i), set.code(j), set.words_per_code);
}

QueryWeights query_weights(const Matrix& class_weights, const ClassProbabilities& p) {
    require_dims(p.probs.size() == class_weights.rows, "probability length vs class count");
    std::size_t q = class_weights.cols;
    QueryWeights w;
    w.weights.assign(q, 0.0);
    for (std::size_t i = 0; i < class_weights.rows; ++i)
        kernels::axpy(p.probs[i], class_weights.row(i), w.weights.data(), q);
    return w;
}

double weighted_hamming(const QueryWeights& w, const std::uint64_t* a, const std::uint64_t* b,
                        std::size_t q) {
    require_dims(w.weights.size() == q, "weight length vs code length");
    Vec w2 = w.squared();
    return kernels::weighted_hamming(w2.data(), q, a, b);
}

namespace {

void sort_ranked(RankedList& list) {
    std::sort(list.begin(), list.end(), [](const RankedItem& x, const RankedItem& y) {
        if (x.distance != y.distance) return x.distance < y.distance;
        return x.index < y.index;
    });
}

}  // namespace

RankedList rank_exact(const BitCodeSet& set, const std::uint64_t* query_code,
                      const QueryWeights& w) {
    require_dims(w.weights.size() == set.code_length, "weight length vs code length");
    Vec w2 = w.squared();
    Vec dist(set.num_items);
    kernels::weighted_scan(w2.data(), set.code_length, query_code, set.words.data(),
                           set.words_per_code, set.num_items, dist.data());
    RankedList list(set.num_items);
    for (std::size_t i = 0; i < set.num_items; ++i) list[i] = RankedItem{i, dist[i]};
    sort_ranked(list);
    return list;
}

RankedList rank_two_phase(const BitCodeSet& set, const std::uint64_t* query_code,
                          const QueryWeights& w, std::size_t radius, std::size_t k) {
    require_dims(w.weights.size() == set.code_length, "weight length vs code length");
    if (radius > set.code_length) throw RangeError("radius exceeds code length");
    if (k < 1) throw ArgumentError("k must be >= 1");

    std::vector<std::uint32_t> ham(set.num_items);
    kernels::hamming_scan(query_code, set.words.data(), set.words_per_code, set.num_items,
                          ham.data());

    // histogram over distances, then widen the radius until k candidates
    std::vector<std::size_t> hist(set.code_length + 1, 0);
    for (std::uint32_t d : ham) ++hist[d];
    std::size_t r = radius;
    std::size_t candidates = 0;
    for (std::size_t d = 0; d <= r; ++d) candidates += hist[d];
    while (candidates < k && r < set.code_length) {
        ++r;
        candidates += hist[r];
    }

    Vec w2 = w.squared();
    RankedList list;
    list.reserve(candidates);
    for (std::size_t i = 0; i < set.num_items; ++i) {
        if (ham[i] > r) continue;
        double d = kernels::weighted_hamming(w2.data(), set.code_length, query_code, set.code(i));
        list.push_back(RankedItem{i, d});
    }
    sort_ranked(list);
    if (list.size() > k) list.resize(k);
    return list;
}

RankedList retrieve(const ModelParams& params, const Vec& query_features, const BitCodeSet& set,
                    RankMode mode, std::size_t radius, std::size_t k) {
    require_dims(params.code_length() == set.code_length, "model vs index code length");
    Vec rep = forward_features(params, query_features);
    ClassProbabilities p = forward_class_probs(params, rep);
    HashActivation h = forward_hash(params, rep);
    std::vector<std::uint64_t> qcode = pack_code(binarize(h));
    QueryWeights w = query_weights(params.class_weights, p);
    if (mode == RankMode::exact) {
        RankedList list = rank_exact(set, qcode.data(), w);
        if (list.size() > k) list.resize(k);
        return list;
    }
    return rank_two_phase(set, qcode.data(), w, radius, k);
}

}  // namespace qdwh
