#include "spades/adam.hpp"

#include <cmath>

namespace spades {

Adam::Adam(std::vector<Var> params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
    if (config_.lr < 0.0) throw std::invalid_argument("adam: lr must be >= 0");
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& p : params_) {
        m_.emplace_back(p->size(), 0.0);
        v_.emplace_back(p->size(), 0.0);
    }
}

void Adam::step() {
    ++step_;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
    for (std::size_t pi = 0; pi < params_.size(); ++pi) {
        Tensor& p = *params_[pi];
        p.ensure_grad();
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double g = p.g[i];
            if (!std::isfinite(g)) {
                throw training_divergence_error("adam: non-finite gradient at step " +
                                                std::to_string(step_));
            }
            m_[pi][i] = config_.beta1 * m_[pi][i] + (1.0 - config_.beta1) * g;
            v_[pi][i] = config_.beta2 * v_[pi][i] + (1.0 - config_.beta2) * g * g;
            const double mhat = m_[pi][i] / bc1;
            const double vhat = v_[pi][i] / bc2;
            p.v[i] -= config_.lr * mhat / (std::sqrt(vhat) + config_.eps);
        }
    }
}

void Adam::zero_grad() {
    for (const auto& p : params_) p->zero_grad();
}

double grad_check(const std::function<Var(Tape&)>& build, const std::vector<Var>& params,
                  double epsilon) {
    // Reverse-mode gradients.
    for (const auto& p : params) {
        p->ensure_grad();
        p->zero_grad();
    }
    {
        Tape tape;
        Var out = build(tape);
        tape.backward(out);
    }
    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (const auto& p : params) analytic.push_back(p->g);

    auto eval = [&]() {
        Tape tape;
        return build(tape)->v[0];
    };

    double max_rel = 0.0;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor& p = *params[pi];
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double saved = p.v[i];
            p.v[i] = saved + epsilon;
            const double hi = eval();
            p.v[i] = saved - epsilon;
            const double lo = eval();
            p.v[i] = saved;
            const double fd = (hi - lo) / (2.0 * epsilon);
            const double ad = analytic[pi][i];
            const double denom = std::max(std::abs(fd) + std::abs(ad), 1e-8);
            max_rel = std::max(max_rel, std::abs(fd - ad) / denom);
        }
    }
    return max_rel;
}

} // namespace spades
