#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace facefuse::simd {

/// Number of interleaved partial sums every dot-product variant keeps. The
/// scalar reference and each SIMD variant accumulate lane l over indices
/// i with i % kDotLanes == l, then reduce the lanes with one fixed tree, so
/// every variant returns bitwise-identical results.
inline constexpr std::size_t kDotLanes = 8;

/// One implementation of the data-parallel inner loops.
struct KernelTable {
    std::string_view name;
    // y[i] += a * x[i]
    void (*axpy_f32)(std::size_t n, float a, const float* x, float* y);
    void (*axpy_f64)(std::size_t n, double a, const double* x, double* y);
    // sum_i x[i] * y[i] in the lane order above
    float (*dot_f32)(std::size_t n, const float* x, const float* y);
    double (*dot_f64)(std::size_t n, const double* x, const double* y);
    // C[m x n] += A[m x k] * B[k x n], row-major with leading dimensions.
    // Every C element accumulates its k products strictly in index order,
    // starting from its current value.
    void (*gemm_f32)(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda, const float* b,
                     std::size_t ldb, float* c, std::size_t ldc);
    void (*gemm_f64)(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda, const double* b,
                     std::size_t ldb, double* c, std::size_t ldc);
};

const KernelTable& scalar_kernels();

/// Null when the build or the running CPU lacks AVX2.
const KernelTable* avx2_kernels();

/// Table used by the engine: FACEFUSE_SIMD=scalar forces the reference path,
/// otherwise the widest variant the CPU supports. Resolved once.
const KernelTable& active_kernels();

/// Replaces the active table. Must not race with running kernels.
void use_kernels(const KernelTable& table);

inline void axpy(float a, std::span<const float> x, std::span<float> y) {
    active_kernels().axpy_f32(y.size(), a, x.data(), y.data());
}
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
    active_kernels().axpy_f64(y.size(), a, x.data(), y.data());
}
inline float dot(std::span<const float> x, std::span<const float> y) {
    return active_kernels().dot_f32(x.size(), x.data(), y.data());
}
inline double dot(std::span<const double> x, std::span<const double> y) {
    return active_kernels().dot_f64(x.size(), x.data(), y.data());
}

/// Dense row-major C += A * B (see KernelTable::gemm_f32).
inline void gemm(std::size_t m, std::size_t n, std::size_t k, const float* a, const float* b, float* c) {
    active_kernels().gemm_f32(m, n, k, a, k, b, n, c, n);
}
inline void gemm(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
    active_kernels().gemm_f64(m, n, k, a, k, b, n, c, n);
}

}  // namespace facefuse::simd
