#pragma once

#include "spades/tape.hpp"
#include "spades/tensor.hpp"

#include <functional>
#include <stdexcept>
#include <vector>

namespace spades {

/// Raised when a gradient or loss goes non-finite during training.
class training_divergence_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct AdamConfig {
    double lr = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam with bias correction. Moment buffers are aligned with the
/// parameter list handed to the constructor.
class Adam {
public:
    Adam(std::vector<Var> params, AdamConfig config);

    /// One update from the gradients currently stored in the parameters'
    /// grad buffers. Throws training_divergence_error on non-finite
    /// gradients.
    void step();

    void zero_grad();
    std::size_t step_count() const { return step_; }

private:
    std::vector<Var> params_;
    AdamConfig config_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    std::size_t step_ = 0;
};

/// Max relative error between reverse-mode gradients and central finite
/// differences of a scalar-valued build function. `build` must construct
/// the same computation on the given tape each call (parameters are read
/// in place). Unreliable at kinks; fixtures must keep a margin from them.
double grad_check(const std::function<Var(Tape&)>& build, const std::vector<Var>& params,
                  double epsilon = 1e-6);

} // namespace spades
