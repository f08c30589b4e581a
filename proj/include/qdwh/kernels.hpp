#pragma once

#include <cstddef>
#include <cstdint>

namespace qdwh::kernels {

// Data-parallel inner loops behind the index scans and the dense forward
// passes. Every kernel has a scalar reference implementation and an AVX2
// variant; dispatch picks one at startup from CPUID and can be overridden
// for testing. The floating-point kernels accumulate in four lanes folded
// as (l0+l2)+(l1+l3) with a sequential tail, in both backends, so scalar
// and AVX2 results are bit-identical, not merely close.
enum class Backend { scalar, avx2 };

Backend active_backend();
bool backend_supported(Backend b);
// Throws ArgumentError if the CPU lacks the requested backend.
void force_backend(Backend b);

// ---- bit-code kernels (codes are little-endian u64 words) ----

// Popcount of XOR over `words` words.
std::uint32_t hamming(const std::uint64_t* a, const std::uint64_t* b, std::size_t words);

// Plain Hamming distance from `query` to each of n codes laid out
// contiguously with `words_per_code` words per item.
void hamming_scan(const std::uint64_t* query, const std::uint64_t* db, std::size_t words_per_code,
                  std::size_t n, std::uint32_t* out);

// Sum of w2[k] over bit positions k where a and b differ. w2 holds the
// per-bit squared weights, length q; bits at positions >= q must be zero.
double weighted_hamming(const double* w2, std::size_t q, const std::uint64_t* a,
                        const std::uint64_t* b);

void weighted_scan(const double* w2, std::size_t q, const std::uint64_t* query,
                   const std::uint64_t* db, std::size_t words_per_code, std::size_t n, double* out);

// ---- dense kernels ----

double dot(const double* a, const double* b, std::size_t n);

// y += alpha * x, elementwise.
void axpy(double alpha, const double* x, double* y, std::size_t n);

// Reference implementations, callable directly (equivalence tests compare
// these against whatever dispatch selected).
namespace scalar {
std::uint32_t hamming(const std::uint64_t* a, const std::uint64_t* b, std::size_t words);
void hamming_scan(const std::uint64_t* query, const std::uint64_t* db, std::size_t words_per_code,
                  std::size_t n, std::uint32_t* out);
double weighted_hamming(const double* w2, std::size_t q, const std::uint64_t* a,
                        const std::uint64_t* b);
void weighted_scan(const double* w2, std::size_t q, const std::uint64_t* query,
                   const std::uint64_t* db, std::size_t words_per_code, std::size_t n, double* out);
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace scalar

// AVX2 variants. Calling these on a CPU without AVX2 is undefined; go
// through the dispatched entry points unless a test has checked support.
namespace avx2 {
std::uint32_t hamming(const std::uint64_t* a, const std::uint64_t* b, std::size_t words);
void hamming_scan(const std::uint64_t* query, const std::uint64_t* db, std::size_t words_per_code,
                  std::size_t n, std::uint32_t* out);
double weighted_hamming(const double* w2, std::size_t q, const std::uint64_t* a,
                        const std::uint64_t* b);
void weighted_scan(const double* w2, std::size_t q, const std::uint64_t* query,
                   const std::uint64_t* db, std::size_t words_per_code, std::size_t n, double* out);
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace avx2

}  // namespace qdwh::kernels
