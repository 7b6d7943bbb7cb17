#include "spades/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace spades {

namespace {
std::size_t shape_size(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return shape.empty() ? 0 : n;
}
} // namespace

Tensor::Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
    v.assign(shape_size(shape_), 0.0);
}

Tensor Tensor::from(std::vector<std::size_t> shape, std::vector<double> values) {
    Tensor t;
    t.shape_ = std::move(shape);
    if (values.size() != shape_size(t.shape_)) {
        throw std::invalid_argument("Tensor::from: value count does not match shape");
    }
    t.v = std::move(values);
    return t;
}

Tensor Tensor::scalar(double value) { return from({1}, {value}); }

void Tensor::ensure_grad() {
    if (g.size() != v.size()) g.assign(v.size(), 0.0);
}

void Tensor::zero_grad() { g.assign(v.size(), 0.0); }

bool Tensor::all_finite() const {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

} // namespace spades
