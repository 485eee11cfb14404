#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "facefuse/engine/tensor.hpp"
#include "facefuse/rng.hpp"

namespace facefuse::test {

template <class Real = double>
Tensor<Real> random_tensor(Rng& rng, Shape shape, double lo = -1, double hi = 1) {
    Tensor<Real> t(std::move(shape));
    for (Real& v : t.data()) v = static_cast<Real>(rng.uniform(lo, hi));
    return t;
}

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("facefuse_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace facefuse::test
