#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace facefuse {

/// Stable 64-bit FNV-1a; std::hash is not portable across standard libraries.
std::uint64_t hash_string(std::string_view text) noexcept;

/// splitmix64 finalizer over the pair; used to derive independent seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept;

/// mt19937_64 with hand-written distributions. The standard distributions are
/// implementation-defined, which would make runs differ between toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    /// Uniform in [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n). n must be positive.
    std::size_t below(std::size_t n);
    /// Standard normal via Box-Muller (no cached second value).
    double normal();
    bool coin(double p = 0.5) { return uniform() < p; }

    std::string state() const;
    void restore(const std::string& state);

private:
    std::mt19937_64 engine_;
};

}  // namespace facefuse
