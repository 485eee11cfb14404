#include "facefuse/simd/kernels.hpp"

#include "lane_reduce.hpp"

namespace facefuse::simd {
namespace {

template <class Real>
void axpy_scalar(std::size_t n, Real a, const Real* x, Real* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + a * x[i];
}

template <class Real>
Real dot_scalar(std::size_t n, const Real* x, const Real* y) {
    Real lanes[kDotLanes] = {};
    std::size_t i = 0;
    for (; i + kDotLanes <= n; i += kDotLanes) {
        for (std::size_t l = 0; l < kDotLanes; ++l) lanes[l] = lanes[l] + x[i + l] * y[i + l];
    }
    Real sum = reduce_lanes(lanes);
    for (; i < n; ++i) sum = sum + x[i] * y[i];
    return sum;
}

// i-p-j order: for a fixed C element the products still arrive in p order.
template <class Real>
void gemm_scalar(std::size_t m, std::size_t n, std::size_t k, const Real* a, std::size_t lda, const Real* b,
                 std::size_t ldb, Real* c, std::size_t ldc) {
    for (std::size_t i = 0; i < m; ++i) {
        Real* c_row = c + i * ldc;
        for (std::size_t p = 0; p < k; ++p) {
            const Real scale = a[i * lda + p];
            const Real* b_row = b + p * ldb;
            for (std::size_t j = 0; j < n; ++j) c_row[j] = c_row[j] + scale * b_row[j];
        }
    }
}

constexpr KernelTable kScalar{
    "scalar",
    &axpy_scalar<float>,
    &axpy_scalar<double>,
    &dot_scalar<float>,
    &dot_scalar<double>,
    &gemm_scalar<float>,
    &gemm_scalar<double>,
};

}  // namespace

const KernelTable& scalar_kernels() { return kScalar; }

}  // namespace facefuse::simd
