// Compiled with -mavx2 (no -mfma): multiply and add stay separate roundings
// so results match the scalar reference bit for bit.
#include "facefuse/simd/kernels.hpp"

#if defined(__AVX2__)
#include <immintrin.h>

namespace facefuse::simd {
namespace {

void axpy_f32(std::size_t n, float a, const float* x, float* y) {
    const __m256 va = _mm256_set1_ps(a);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 prod = _mm256_mul_ps(va, _mm256_loadu_ps(x + i));
        _mm256_storeu_ps(y + i, _mm256_add_ps(_mm256_loadu_ps(y + i), prod));
    }
    for (; i < n; ++i) y[i] = y[i] + a * x[i];
}

void axpy_f64(std::size_t n, double a, const double* x, double* y) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
    }
    for (; i < n; ++i) y[i] = y[i] + a * x[i];
}

float dot_f32(std::size_t n, const float* x, const float* y) {
    __m256 acc = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc = _mm256_add_ps(acc, _mm256_mul_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
    }
    // [l0+l4, l1+l5, l2+l6, l3+l7] -> [(l0+l4)+(l2+l6), (l1+l5)+(l3+l7)] -> sum
    __m128 half = _mm_add_ps(_mm256_castps256_ps128(acc), _mm256_extractf128_ps(acc, 1));
    half = _mm_add_ps(half, _mm_movehl_ps(half, half));
    float sum = _mm_cvtss_f32(_mm_add_ss(half, _mm_shuffle_ps(half, half, 0x1)));
    for (; i < n; ++i) sum = sum + x[i] * y[i];
    return sum;
}

double dot_f64(std::size_t n, const double* x, const double* y) {
    // Two registers emulate the eight scalar lanes: lo = lanes 0..3, hi = 4..7.
    __m256d lo = _mm256_setzero_pd();
    __m256d hi = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        lo = _mm256_add_pd(lo, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
        hi = _mm256_add_pd(hi, _mm256_mul_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
    }
    const __m256d folded = _mm256_add_pd(lo, hi);
    const __m128d half = _mm_add_pd(_mm256_castpd256_pd128(folded), _mm256_extractf128_pd(folded, 1));
    double sum = _mm_cvtsd_f64(_mm_add_sd(half, _mm_unpackhi_pd(half, half)));
    for (; i < n; ++i) sum = sum + x[i] * y[i];
    return sum;
}

struct F32 {
    using Real = float;
    using Vec = __m256;
    static constexpr std::size_t width = 8;
    static Vec zero() { return _mm256_setzero_ps(); }
    static Vec load(const float* p) { return _mm256_loadu_ps(p); }
    static void store(float* p, Vec v) { _mm256_storeu_ps(p, v); }
    static Vec splat(float v) { return _mm256_set1_ps(v); }
    static Vec madd(Vec acc, Vec a, Vec b) { return _mm256_add_ps(acc, _mm256_mul_ps(a, b)); }
    static __m256i mask(std::size_t count) {
        const __m256i lane = _mm256_setr_epi32(0, 1, 2, 3, 4, 5, 6, 7);
        return _mm256_cmpgt_epi32(_mm256_set1_epi32(static_cast<int>(count)), lane);
    }
    static Vec load(const float* p, __m256i m) { return _mm256_maskload_ps(p, m); }
    static void store(float* p, Vec v, __m256i m) { _mm256_maskstore_ps(p, m, v); }
};

struct F64 {
    using Real = double;
    using Vec = __m256d;
    static constexpr std::size_t width = 4;
    static Vec zero() { return _mm256_setzero_pd(); }
    static Vec load(const double* p) { return _mm256_loadu_pd(p); }
    static void store(double* p, Vec v) { _mm256_storeu_pd(p, v); }
    static Vec splat(double v) { return _mm256_set1_pd(v); }
    static Vec madd(Vec acc, Vec a, Vec b) { return _mm256_add_pd(acc, _mm256_mul_pd(a, b)); }
    static __m256i mask(std::size_t count) {
        const __m256i lane = _mm256_setr_epi64x(0, 1, 2, 3);
        return _mm256_cmpgt_epi64(_mm256_set1_epi64x(static_cast<long long>(count)), lane);
    }
    static Vec load(const double* p, __m256i m) { return _mm256_maskload_pd(p, m); }
    static void store(double* p, Vec v, __m256i m) { _mm256_maskstore_pd(p, m, v); }
};

// Register tile of Rows x (Vecs * width) held across the whole k loop.
template <class T, std::size_t Rows, std::size_t Vecs>
void gemm_tile(std::size_t k, const typename T::Real* a, std::size_t lda, const typename T::Real* b,
               std::size_t ldb, typename T::Real* c, std::size_t ldc) {
    typename T::Vec acc[Rows][Vecs];
    for (std::size_t r = 0; r < Rows; ++r)
        for (std::size_t v = 0; v < Vecs; ++v) acc[r][v] = T::load(c + r * ldc + v * T::width);
    for (std::size_t p = 0; p < k; ++p) {
        typename T::Vec bv[Vecs];
        for (std::size_t v = 0; v < Vecs; ++v) bv[v] = T::load(b + p * ldb + v * T::width);
        for (std::size_t r = 0; r < Rows; ++r) {
            const typename T::Vec av = T::splat(a[r * lda + p]);
            for (std::size_t v = 0; v < Vecs; ++v) acc[r][v] = T::madd(acc[r][v], av, bv[v]);
        }
    }
    for (std::size_t r = 0; r < Rows; ++r)
        for (std::size_t v = 0; v < Vecs; ++v) T::store(c + r * ldc + v * T::width, acc[r][v]);
}

// Fewer than `width` trailing columns, handled with masked loads and stores.
template <class T, std::size_t Rows>
void gemm_tail(std::size_t cols, std::size_t k, const typename T::Real* a, std::size_t lda,
               const typename T::Real* b, std::size_t ldb, typename T::Real* c, std::size_t ldc) {
    const __m256i m = T::mask(cols);
    typename T::Vec acc[Rows];
    for (std::size_t r = 0; r < Rows; ++r) acc[r] = T::load(c + r * ldc, m);
    for (std::size_t p = 0; p < k; ++p) {
        const typename T::Vec bv = T::load(b + p * ldb, m);
        for (std::size_t r = 0; r < Rows; ++r) acc[r] = T::madd(acc[r], T::splat(a[r * lda + p]), bv);
    }
    for (std::size_t r = 0; r < Rows; ++r) T::store(c + r * ldc, acc[r], m);
}

template <class T, std::size_t Rows>
void gemm_rows(std::size_t n, std::size_t k, const typename T::Real* a, std::size_t lda,
               const typename T::Real* b, std::size_t ldb, typename T::Real* c, std::size_t ldc) {
    constexpr std::size_t w = T::width;
    std::size_t j = 0;
    for (; j + 2 * w <= n; j += 2 * w) gemm_tile<T, Rows, 2>(k, a, lda, b + j, ldb, c + j, ldc);
    for (; j + w <= n; j += w) gemm_tile<T, Rows, 1>(k, a, lda, b + j, ldb, c + j, ldc);
    if (j < n) gemm_tail<T, Rows>(n - j, k, a, lda, b + j, ldb, c + j, ldc);
}

template <class T>
void gemm(std::size_t m, std::size_t n, std::size_t k, const typename T::Real* a, std::size_t lda,
          const typename T::Real* b, std::size_t ldb, typename T::Real* c, std::size_t ldc) {
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4) gemm_rows<T, 4>(n, k, a + i * lda, lda, b, ldb, c + i * ldc, ldc);
    for (; i < m; ++i) gemm_rows<T, 1>(n, k, a + i * lda, lda, b, ldb, c + i * ldc, ldc);
}

constexpr KernelTable kAvx2{"avx2", &axpy_f32, &axpy_f64, &dot_f32, &dot_f64, &gemm<F32>, &gemm<F64>};

}  // namespace

const KernelTable* avx2_kernels() {
    static const bool supported = __builtin_cpu_supports("avx2");
    return supported ? &kAvx2 : nullptr;
}

}  // namespace facefuse::simd

#else

namespace facefuse::simd {
const KernelTable* avx2_kernels() { return nullptr; }
}  // namespace facefuse::simd

#endif
