#include "spades/params.hpp"

#include <cmath>
#include <stdexcept>

namespace spades {

Var ParamStore::create(const std::string& name, std::vector<std::size_t> shape) {
    for (const auto& [n, t] : entries_) {
        if (n == name) throw std::invalid_argument("param already registered: " + name);
    }
    Var t = make_var(Tensor(std::move(shape)));
    entries_.emplace_back(name, t);
    return t;
}

Var ParamStore::get(const std::string& name) const {
    for (const auto& [n, t] : entries_) {
        if (n == name) return t;
    }
    throw std::invalid_argument("unknown param: " + name);
}

Var ParamStore::acquire(ParamInit mode, const std::string& name, std::vector<std::size_t> shape) {
    if (mode == ParamInit::Create) return create(name, std::move(shape));
    Var t = get(name);
    if (t->shape() != shape) throw std::invalid_argument("param shape mismatch: " + name);
    return t;
}

std::vector<Var> ParamStore::tensors() const {
    std::vector<Var> out;
    out.reserve(entries_.size());
    for (const auto& [n, t] : entries_) out.push_back(t);
    return out;
}

std::size_t ParamStore::total_size() const {
    std::size_t n = 0;
    for (const auto& [name, t] : entries_) n += t->size();
    return n;
}

ParamStore ParamStore::clone() const {
    ParamStore copy;
    for (const auto& [name, t] : entries_) {
        Var c = copy.create(name, t->shape());
        c->v = t->v;
        c->ensure_grad();
    }
    return copy;
}

void ParamStore::zero_grads() {
    for (const auto& [name, t] : entries_) t->zero_grad();
}

void ParamStore::add_grads_from(const ParamStore& other) {
    if (other.entries_.size() != entries_.size()) {
        throw std::invalid_argument("param store layout mismatch");
    }
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        Tensor& dst = *entries_[i].second;
        const Tensor& src = *other.entries_[i].second;
        dst.ensure_grad();
        if (src.g.size() != dst.g.size()) throw std::invalid_argument("param grad size mismatch");
        for (std::size_t j = 0; j < dst.g.size(); ++j) dst.g[j] += src.g[j];
    }
}

void ParamStore::copy_values_from(const ParamStore& other) {
    if (other.entries_.size() != entries_.size()) {
        throw std::invalid_argument("param store layout mismatch");
    }
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        entries_[i].second->v = other.entries_[i].second->v;
    }
}

void ParamStore::init_xavier(const Var& t, Rng& rng) {
    if (t->rank() <= 1) {
        for (auto& v : t->v) v = 0.0;
        return;
    }
    // fan_in/fan_out from the leading/trailing axes; conv kernels
    // [W,Cin,Cout] fold the width into fan_in.
    double fan_in = 1.0, fan_out = 1.0;
    const auto& s = t->shape();
    if (s.size() == 2) {
        fan_in = static_cast<double>(s[0]);
        fan_out = static_cast<double>(s[1]);
    } else {
        fan_in = static_cast<double>(s[0] * s[1]);
        fan_out = static_cast<double>(s[s.size() - 1]);
    }
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    for (auto& v : t->v) v = rng.uniform(-a, a);
}

} // namespace spades
