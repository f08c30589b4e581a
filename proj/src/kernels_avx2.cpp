// AVX2 kernel variants. This translation unit is compiled with -mavx2 and
// must only be entered through the dispatch table (or by tests that checked
// backend_supported first). Reductions keep the same four-lane combine as
// the scalar reference, so outputs are bit-identical across backends.

#include <bit>
#include <cstring>
#include <immintrin.h>

#include "qdwh/kernels.hpp"

namespace qdwh::kernels::avx2 {

namespace {

// Nibble -> four-lane blend masks for the weighted kernels.
alignas(32) constexpr std::uint64_t kNibbleMask[16][4] = {
    {0, 0, 0, 0},    {~0ull, 0, 0, 0},        {0, ~0ull, 0, 0},    {~0ull, ~0ull, 0, 0},
    {0, 0, ~0ull, 0}, {~0ull, 0, ~0ull, 0},    {0, ~0ull, ~0ull, 0}, {~0ull, ~0ull, ~0ull, 0},
    {0, 0, 0, ~0ull}, {~0ull, 0, 0, ~0ull},    {0, ~0ull, 0, ~0ull}, {~0ull, ~0ull, 0, ~0ull},
    {0, 0, ~0ull, ~0ull}, {~0ull, 0, ~0ull, ~0ull}, {0, ~0ull, ~0ull, ~0ull},
    {~0ull, ~0ull, ~0ull, ~0ull}};

// Per-64-bit-lane popcount (nibble LUT + SAD).
inline __m256i popcount_epi64(__m256i v) {
    const __m256i lut =
        _mm256_setr_epi8(0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4, 0, 1, 1, 2, 1, 2, 2, 3, 1,
                         2, 2, 3, 2, 3, 3, 4);
    const __m256i low = _mm256_set1_epi8(0x0f);
    __m256i lo = _mm256_and_si256(v, low);
    __m256i hi = _mm256_and_si256(_mm256_srli_epi16(v, 4), low);
    __m256i cnt = _mm256_add_epi8(_mm256_shuffle_epi8(lut, lo), _mm256_shuffle_epi8(lut, hi));
    return _mm256_sad_epu8(cnt, _mm256_setzero_si256());
}

// (l0+l2)+(l1+l3), matching the scalar lane fold.
inline double fold_lanes(__m256d acc) {
    __m128d lo = _mm256_castpd256_pd128(acc);
    __m128d hi = _mm256_extractf128_pd(acc, 1);
    __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(s) + _mm_cvtsd_f64(_mm_unpackhi_pd(s, s));
}

}  // namespace

std::uint32_t hamming(const std::uint64_t* a, const std::uint64_t* b, std::size_t words) {
    std::size_t main = words / 4 * 4;
    std::uint32_t total = 0;
    if (main) {
        __m256i acc = _mm256_setzero_si256();
        for (std::size_t w = 0; w < main; w += 4) {
            __m256i va = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + w));
            __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + w));
            acc = _mm256_add_epi64(acc, popcount_epi64(_mm256_xor_si256(va, vb)));
        }
        alignas(32) std::uint64_t lanes[4];
        _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), acc);
        total = static_cast<std::uint32_t>(lanes[0] + lanes[1] + lanes[2] + lanes[3]);
    }
    for (std::size_t w = main; w < words; ++w) {
        total += static_cast<std::uint32_t>(std::popcount(a[w] ^ b[w]));
    }
    return total;
}

void hamming_scan(const std::uint64_t* query, const std::uint64_t* db, std::size_t words_per_code,
                  std::size_t n, std::uint32_t* out) {
    if (words_per_code == 1) {
        // Hot case (q <= 64): four codes per iteration, SAD gives one count
        // per 64-bit lane which is exactly one count per item.
        __m256i qv = _mm256_set1_epi64x(static_cast<long long>(query[0]));
        std::size_t main = n / 4 * 4;
        alignas(32) std::uint64_t lanes[4];
        for (std::size_t i = 0; i < main; i += 4) {
            __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(db + i));
            _mm256_store_si256(reinterpret_cast<__m256i*>(lanes),
                               popcount_epi64(_mm256_xor_si256(v, qv)));
            out[i] = static_cast<std::uint32_t>(lanes[0]);
            out[i + 1] = static_cast<std::uint32_t>(lanes[1]);
            out[i + 2] = static_cast<std::uint32_t>(lanes[2]);
            out[i + 3] = static_cast<std::uint32_t>(lanes[3]);
        }
        for (std::size_t i = main; i < n; ++i) {
            out[i] = static_cast<std::uint32_t>(std::popcount(query[0] ^ db[i]));
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = hamming(query, db + i * words_per_code, words_per_code);
        }
    }
}

double weighted_hamming(const double* w2, std::size_t q, const std::uint64_t* a,
                        const std::uint64_t* b) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t groups = q / 4;
    for (std::size_t g = 0; g < groups; ++g) {
        std::uint64_t nib = (a[g / 16] ^ b[g / 16]) >> (4 * (g % 16)) & 0xf;
        __m256d mask = _mm256_load_pd(reinterpret_cast<const double*>(kNibbleMask[nib]));
        __m256d w = _mm256_loadu_pd(w2 + 4 * g);
        acc = _mm256_add_pd(acc, _mm256_and_pd(w, mask));
    }
    double total = fold_lanes(acc);
    for (std::size_t k = 4 * groups; k < q; ++k) {
        if ((a[k / 64] ^ b[k / 64]) >> (k % 64) & 1) total += w2[k];
    }
    return total;
}

void weighted_scan(const double* w2, std::size_t q, const std::uint64_t* query,
                   const std::uint64_t* db, std::size_t words_per_code, std::size_t n,
                   double* out) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = weighted_hamming(w2, q, query, db + i * words_per_code);
    }
}

double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t main = n / 4 * 4;
    for (std::size_t i = 0; i < main; i += 4) {
        // mul then add, no FMA, to match the scalar reference rounding
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    double total = fold_lanes(acc);
    for (std::size_t i = main; i < n; ++i) total += a[i] * b[i];
    return total;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    __m256d av = _mm256_set1_pd(alpha);
    std::size_t main = n / 4 * 4;
    for (std::size_t i = 0; i < main; i += 4) {
        __m256d yv = _mm256_add_pd(_mm256_loadu_pd(y + i),
                                   _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
        _mm256_storeu_pd(y + i, yv);
    }
    for (std::size_t i = main; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace qdwh::kernels::avx2
