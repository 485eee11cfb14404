#include <atomic>
#include <cstdlib>
#include <string_view>

#include "facefuse/simd/kernels.hpp"

namespace facefuse::simd {
namespace {

const KernelTable& select() {
    const char* forced = std::getenv("FACEFUSE_SIMD");
    if (forced != nullptr && std::string_view(forced) == "scalar") return scalar_kernels();
    if (const KernelTable* wide = avx2_kernels()) return *wide;
    return scalar_kernels();
}

std::atomic<const KernelTable*>& slot() {
    static std::atomic<const KernelTable*> table{&select()};
    return table;
}

}  // namespace

const KernelTable& active_kernels() { return *slot().load(std::memory_order_acquire); }

void use_kernels(const KernelTable& table) { slot().store(&table, std::memory_order_release); }

}  // namespace facefuse::simd
