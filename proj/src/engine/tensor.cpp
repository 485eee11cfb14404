#include "facefuse/engine/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "facefuse/error.hpp"

namespace facefuse {

std::size_t element_count(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t extent : shape) n *= extent;
    return n;
}

std::string to_string(const Shape& shape) {
    std::string text = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i != 0) text += ",";
        text += std::to_string(shape[i]);
    }
    return text + "]";
}

namespace {

void check_extents(const Shape& shape) {
    for (std::size_t axis = 0; axis < shape.size(); ++axis) {
        if (shape[axis] == 0) {
            throw DimensionError("tensor axis " + std::to_string(axis) + " has zero extent in shape " +
                                 to_string(shape));
        }
    }
}

}  // namespace

template <class Real>
Tensor<Real>::Tensor(Shape shape) : shape_(std::move(shape)) {
    check_extents(shape_);
    data_.assign(element_count(shape_), Real(0));
}

template <class Real>
Tensor<Real>::Tensor(Shape shape, std::vector<Real> values) : shape_(std::move(shape)), data_(std::move(values)) {
    check_extents(shape_);
    if (data_.size() != element_count(shape_)) {
        throw DimensionError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                             to_string(shape_));
    }
}

template <class Real>
Tensor<Real> Tensor<Real>::reshaped(Shape shape) const& {
    return Tensor(std::move(shape), data_);
}

template <class Real>
Tensor<Real> Tensor<Real>::reshaped(Shape shape) && {
    return Tensor(std::move(shape), std::move(data_));
}

template <class Real>
void Tensor<Real>::fill(Real value) {
    std::fill(data_.begin(), data_.end(), value);
}

template <class Real>
bool Tensor<Real>::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](Real v) { return std::isfinite(v); });
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace facefuse
