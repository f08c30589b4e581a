#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "qdwh/matrix.hpp"
#include "qdwh/model.hpp"

namespace qdwh {

// Bit-packed codes, one q-bit code per item. Storage is little-endian
// 64-bit words; the byte view (bit k of an item at byte k/8, bit position
// k%8) is the on-disk record layout. Padding bits above q stay zero.
struct BitCodeSet {
    std::size_t num_items = 0;
    std::size_t code_length = 0;
    std::size_t words_per_code = 0;
    std::vector<std::uint64_t> words;

    const std::uint64_t* code(std::size_t i) const { return words.data() + i * words_per_code; }
    std::uint64_t* code(std::size_t i) { return words.data() + i * words_per_code; }
    std::size_t bytes_per_code() const { return (code_length + 7) / 8; }

    bool bit(std::size_t i, std::size_t k) const { return (code(i)[k / 64] >> (k % 64)) & 1u; }
};

std::size_t words_for(std::size_t q);

// bits are 0/1 values, length q; words must hold words_for(q) entries.
void pack_bits(const std::uint8_t* bits, std::size_t q, std::uint64_t* words);
std::vector<std::uint8_t> unpack_bits(const std::uint64_t* words, std::size_t q);

std::vector<std::uint64_t> pack_code(const std::vector<std::uint8_t>& bits);

// All codes must share one length; entries must be 0 or 1.
BitCodeSet build_index(const std::vector<std::vector<std::uint8_t>>& codes);

// Byte view of one item in record layout.
std::vector<std::uint8_t> code_bytes(const BitCodeSet& set, std::size_t i);
// Rebuild from n records of (q+7)/8 bytes each.
BitCodeSet codes_from_bytes(std::size_t n, std::size_t q, const std::vector<std::uint8_t>& bytes);

std::uint32_t hamming_distance(const BitCodeSet& set, std::size_t i, std::size_t j);

// Query-adaptive weight vector w_q = class_weights^T probs.
struct QueryWeights {
    Vec weights;

    Vec squared() const {
        Vec s(weights.size());
        for (std::size_t k = 0; k < s.size(); ++k) s[k] = weights[k] * weights[k];
        return s;
    }
};

QueryWeights query_weights(const Matrix& class_weights, const ClassProbabilities& p);

// sum_k w[k]^2 over differing bit positions.
double weighted_hamming(const QueryWeights& w, const std::uint64_t* a, const std::uint64_t* b,
                        std::size_t q);

struct RankedItem {
    std::size_t index;
    double distance;
};

// Distances non-decreasing, ties broken by ascending index.
using RankedList = std::vector<RankedItem>;

// Every item, sorted by weighted Hamming distance to the query code.
RankedList rank_exact(const BitCodeSet& set, const std::uint64_t* query_code,
                      const QueryWeights& w);

// Coarse filter by plain Hamming radius, weighted re-rank of the
// candidates, top k. The radius grows by 1 while fewer than k candidates
// qualify and r < q.
RankedList rank_two_phase(const BitCodeSet& set, const std::uint64_t* query_code,
                          const QueryWeights& w, std::size_t radius, std::size_t k);

enum class RankMode { exact, two_phase };

// Full query pipeline: features -> representation -> class probabilities
// and hash code -> query weights -> ranking. Returns at most k items.
RankedList retrieve(const ModelParams& params, const Vec& query_features, const BitCodeSet& set,
                    RankMode mode, std::size_t radius, std::size_t k);

}  // namespace qdwh
