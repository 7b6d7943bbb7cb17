#pragma once

#include "spades/rng.hpp"
#include "spades/tensor.hpp"

#include <string>
#include <utility>
#include <vector>

namespace spades {

/// Whether a module constructor registers fresh parameters or binds to
/// tensors already present in the store (e.g. a cloned store).
enum class ParamInit { Create, Bind };

/// Ordered collection of named parameter tensors. Registration order is
/// the canonical order for optimizer state, gradient reduction and
/// checkpoints.
class ParamStore {
public:
    Var create(const std::string& name, std::vector<std::size_t> shape);
    Var get(const std::string& name) const; // throws if missing

    /// create() or get() depending on mode; Bind checks the shape.
    Var acquire(ParamInit mode, const std::string& name, std::vector<std::size_t> shape);

    const std::vector<std::pair<std::string, Var>>& entries() const { return entries_; }
    std::vector<Var> tensors() const;
    std::size_t total_size() const;

    /// Deep copy with fresh tensors (values copied, grads zeroed).
    ParamStore clone() const;

    void zero_grads();
    /// Accumulates `other`'s gradients into this store (same layout).
    void add_grads_from(const ParamStore& other);
    void copy_values_from(const ParamStore& other);

    /// Uniform(-a, a) init with a = sqrt(6 / (fan_in + fan_out)); bias
    /// tensors (rank-1) start at zero.
    static void init_xavier(const Var& t, Rng& rng);

private:
    std::vector<std::pair<std::string, Var>> entries_;
};

} // namespace spades
