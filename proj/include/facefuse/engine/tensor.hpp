#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace facefuse {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string to_string(const Shape& shape);

/// Shape-tagged, row-major, owning array. Extents are strictly positive.
template <class Real>
class Tensor {
public:
    using value_type = Real;

    Tensor() = default;
    explicit Tensor(Shape shape);
    Tensor(Shape shape, std::vector<Real> values);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<Real> data() noexcept { return data_; }
    std::span<const Real> data() const noexcept { return data_; }
    Real& operator[](std::size_t i) { return data_[i]; }
    const Real& operator[](std::size_t i) const { return data_[i]; }

    /// Element of a rank-3 [C,H,W] tensor.
    Real& at(std::size_t c, std::size_t y, std::size_t x) {
        return data_[(c * shape_[1] + y) * shape_[2] + x];
    }
    const Real& at(std::size_t c, std::size_t y, std::size_t x) const {
        return data_[(c * shape_[1] + y) * shape_[2] + x];
    }

    /// Same data, new shape of equal element count.
    Tensor reshaped(Shape shape) const&;
    Tensor reshaped(Shape shape) &&;

    template <class Other>
    Tensor<Other> cast() const {
        return Tensor<Other>(shape_, std::vector<Other>(data_.begin(), data_.end()));
    }

    void fill(Real value);
    bool all_finite() const;

    friend bool operator==(const Tensor& a, const Tensor& b) = default;

private:
    Shape shape_;
    std::vector<Real> data_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace facefuse
