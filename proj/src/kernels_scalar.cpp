#include <bit>

#include "qdwh/kernels.hpp"

// Reference kernels. Deliberately plain loops, except that the floating
// point reductions keep the four-lane accumulation contract documented in
// kernels.hpp so the AVX2 variants can match them bit for bit.

namespace qdwh::kernels::scalar {

std::uint32_t hamming(const std::uint64_t* a, const std::uint64_t* b, std::size_t words) {
    std::uint32_t total = 0;
    for (std::size_t w = 0; w < words; ++w) {
        total += static_cast<std::uint32_t>(std::popcount(a[w] ^ b[w]));
    }
    return total;
}

void hamming_scan(const std::uint64_t* query, const std::uint64_t* db, std::size_t words_per_code,
                  std::size_t n, std::uint32_t* out) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = hamming(query, db + i * words_per_code, words_per_code);
    }
}

double weighted_hamming(const double* w2, std::size_t q, const std::uint64_t* a,
                        const std::uint64_t* b) {
    double lane[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t groups = q / 4;
    for (std::size_t g = 0; g < groups; ++g) {
        std::uint64_t nib = (a[g / 16] ^ b[g / 16]) >> (4 * (g % 16));
        std::size_t base = 4 * g;
        for (int l = 0; l < 4; ++l) {
            if (nib >> l & 1) lane[l] += w2[base + l];
        }
    }
    double total = (lane[0] + lane[2]) + (lane[1] + lane[3]);
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
    double lane[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t main = n / 4 * 4;
    for (std::size_t i = 0; i < main; i += 4) {
        lane[0] += a[i] * b[i];
        lane[1] += a[i + 1] * b[i + 1];
        lane[2] += a[i + 2] * b[i + 2];
        lane[3] += a[i + 3] * b[i + 3];
    }
    double total = (lane[0] + lane[2]) + (lane[1] + lane[3]);
    for (std::size_t i = main; i < n; ++i) total += a[i] * b[i];
    return total;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace qdwh::kernels::scalar
