#include "qdwh/kernels.hpp"

#include "qdwh/error.hpp"

namespace qdwh::kernels {

namespace {

struct Table {
    Backend backend;
    std::uint32_t (*hamming)(const std::uint64_t*, const std::uint64_t*, std::size_t);
    void (*hamming_scan)(const std::uint64_t*, const std::uint64_t*, std::size_t, std::size_t,
                         std::uint32_t*);
    double (*weighted_hamming)(const double*, std::size_t, const std::uint64_t*,
                               const std::uint64_t*);
    void (*weighted_scan)(const double*, std::size_t, const std::uint64_t*, const std::uint64_t*,
                          std::size_t, std::size_t, double*);
    double (*dot)(const double*, const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
};

constexpr Table kScalar{Backend::scalar,  scalar::hamming, scalar::hamming_scan,
                        scalar::weighted_hamming, scalar::weighted_scan,
                        scalar::dot,      scalar::axpy};

constexpr Table kAvx2{Backend::avx2,    avx2::hamming, avx2::hamming_scan,
                      avx2::weighted_hamming, avx2::weighted_scan,
                      avx2::dot,        avx2::axpy};

bool cpu_has_avx2() {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

const Table*& active() {
    static const Table* t = cpu_has_avx2() ? &kAvx2 : &kScalar;
    return t;
}

}  // namespace

Backend active_backend() { return active()->backend; }

bool backend_supported(Backend b) { return b == Backend::scalar || cpu_has_avx2(); }

void force_backend(Backend b) {
    if (!backend_supported(b)) throw ArgumentError("requested kernel backend not supported by CPU");
    active() = b == Backend::avx2 ? &kAvx2 : &kScalar;
}

std::uint32_t hamming(const std::uint64_t* a, const std::uint64_t* b, std::size_t words) {
    return active()->hamming(a, b, words);
}

void hamming_scan(const std::uint64_t* query, const std::uint64_t* db, std::size_t words_per_code,
                  std::size_t n, std::uint32_t* out) {
    active()->hamming_scan(query, db, words_per_code, n, out);
}

double weighted_hamming(const double* w2, std::size_t q, const std::uint64_t* a,
                        const std::uint64_t* b) {
    return active()->weighted_hamming(w2, q, a, b);
}

void weighted_scan(const double* w2, std::size_t q, const std::uint64_t* query,
                   const std::uint64_t* db, std::size_t words_per_code, std::size_t n,
                   double* out) {
    active()->weighted_scan(w2, q, query, db, words_per_code, n, out);
}

double dot(const double* a, const double* b, std::size_t n) { return active()->dot(a, b, n); }

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    active()->axpy(alpha, x, y, n);
}

}  // namespace qdwh::kernels
