#pragma once

#include <cstddef>
#include <memory>
#include <vector>

namespace spades {

/// Dense row-major tensor of doubles with an optional gradient buffer of
/// identical shape. Rank up to 3 is what the model needs.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);

    static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }
    static Tensor from(std::vector<std::size_t> shape, std::vector<double> values);
    static Tensor scalar(double v);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return v.size(); }
    std::size_t dim(std::size_t i) const { return shape_[i]; }

    double& operator()(std::size_t i) { return v[i]; }
    double operator()(std::size_t i) const { return v[i]; }
    double& operator()(std::size_t i, std::size_t j) { return v[i * shape_[1] + j]; }
    double operator()(std::size_t i, std::size_t j) const { return v[i * shape_[1] + j]; }
    double& operator()(std::size_t i, std::size_t j, std::size_t k) {
        return v[(i * shape_[1] + j) * shape_[2] + k];
    }
    double operator()(std::size_t i, std::size_t j, std::size_t k) const {
        return v[(i * shape_[1] + j) * shape_[2] + k];
    }

    double& grad(std::size_t i) { return g[i]; }
    double& grad(std::size_t i, std::size_t j) { return g[i * shape_[1] + j]; }
    double& grad(std::size_t i, std::size_t j, std::size_t k) {
        return g[(i * shape_[1] + j) * shape_[2] + k];
    }

    void ensure_grad();
    void zero_grad();
    bool all_finite() const;

    std::vector<double> v; // values
    std::vector<double> g; // gradient; empty until ensure_grad()

private:
    std::vector<std::size_t> shape_;
};

using Var = std::shared_ptr<Tensor>;

inline Var make_var(Tensor t) { return std::make_shared<Tensor>(std::move(t)); }

} // namespace spades
