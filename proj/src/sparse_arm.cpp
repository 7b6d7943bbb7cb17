#include "spades/sparse_arm.hpp"

#include "spades/numeric.hpp"

#include <cmath>
#include <stdexcept>

namespace spades {

const char* family_name(SparseFamily f) {
    switch (f) {
        case SparseFamily::Exponential: return "exponential";
        case SparseFamily::TruncatedNormal: return "truncated-normal";
        case SparseFamily::Gamma: return "gamma";
    }
    return "?";
}

SparseFamily family_from_name(const std::string& name) {
    if (name == "exponential") return SparseFamily::Exponential;
    if (name == "truncated-normal") return SparseFamily::TruncatedNormal;
    if (name == "gamma") return SparseFamily::Gamma;
    throw std::invalid_argument("unknown sparse family: " + name);
}

PatchEmbedding patch(const std::vector<std::vector<double>>& x_past, std::size_t patch_len) {
    if (patch_len < 1) throw std::invalid_argument("patch: patch_len must be >= 1");
    if (x_past.empty()) throw std::invalid_argument("patch: empty history");
    const std::size_t T = x_past.size();
    const std::size_t F = x_past[0].size();
    const std::size_t P = (T + patch_len - 1) / patch_len;

    PatchEmbedding out;
    out.patches = Tensor({P, patch_len * F});
    out.padded.assign(P, false);
    for (std::size_t p = 0; p < P; ++p) {
        for (std::size_t i = 0; i < patch_len; ++i) {
            const std::size_t t = p * patch_len + i;
            if (t >= T) {
                out.padded[p] = true;
                continue; // zero-padded tail
            }
            if (x_past[t].size() != F) throw std::invalid_argument("patch: ragged history");
            for (std::size_t f = 0; f < F; ++f) {
                out.patches(p, i * F + f) = x_past[t][f];
            }
        }
    }
    return out;
}

double exp_icdf(double q, double span, double max_span, double theta) {
    if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("exp_icdf: q must lie in (0,1)");
    if (!(span > 0.0 && span <= max_span)) {
        throw std::invalid_argument("exp_icdf: span must lie in (0, max_span]");
    }
    if (theta <= 0.0) throw std::invalid_argument("exp_icdf: theta must be positive");
    return -(span / max_span) * theta * std::log1p(-q);
}

double truncnorm_icdf(double q, double n_spans, double mu_s, double sigma_s) {
    if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("truncnorm_icdf: q must lie in (0,1)");
    if (n_spans < 1.0) throw std::invalid_argument("truncnorm_icdf: n_spans must be >= 1");
    if (sigma_s <= 0.0) throw std::invalid_argument("truncnorm_icdf: sigma_s must be positive");
    const double mu = mu_s / n_spans;
    const double sigma = sigma_s / std::sqrt(n_spans);
    return std::max(0.0, mu + sigma * normal_icdf(q));
}

std::pair<double, double> gamma_aggregate(const std::vector<double>& shapes, double theta) {
    if (shapes.empty()) throw std::invalid_argument("gamma_aggregate: no shapes");
    if (theta <= 0.0) throw std::invalid_argument("gamma_aggregate: theta must be positive");
    double total = 0.0;
    for (double k : shapes) {
        if (k <= 0.0) throw std::invalid_argument("gamma_aggregate: shapes must be positive");
        total += k;
    }
    return {total, theta};
}

double gamma_disaggregate_shape(double k_total, double span, double max_span) {
    if (k_total <= 0.0) throw std::invalid_argument("gamma_disaggregate: k_total must be positive");
    if (!(span > 0.0 && span <= max_span)) {
        throw std::invalid_argument("gamma_disaggregate: span must lie in (0, max_span]");
    }
    return k_total * span / max_span;
}

SparseQuantileNetwork::SparseQuantileNetwork(const SparseNetConfig& cfg, std::size_t features,
                                             ParamStore& store, const std::string& prefix,
                                             ParamInit mode)
    : cfg_(cfg), features_(features) {
    if (cfg_.patch_len < 1) throw std::invalid_argument("sparse net: patch_len must be >= 1");
    const std::size_t in = cfg_.patch_len * features_;
    embed_w_ = store.acquire(mode, prefix + ".embed.w", {in, cfg_.embed_dim});
    embed_b_ = store.acquire(mode, prefix + ".embed.b", {cfg_.embed_dim});
    std::size_t cur = cfg_.embed_dim;
    for (std::size_t l = 0; l < cfg_.hidden.size(); ++l) {
        const auto next = static_cast<std::size_t>(cfg_.hidden[l]);
        mlp_w_.push_back(store.acquire(mode, prefix + ".mlp" + std::to_string(l) + ".w", {cur, next}));
        mlp_b_.push_back(store.acquire(mode, prefix + ".mlp" + std::to_string(l) + ".b", {next}));
        cur = next;
    }
    head_w_ = store.acquire(mode, prefix + ".head.w", {cur, cfg_.param_count()});
    head_b_ = store.acquire(mode, prefix + ".head.b", {cfg_.param_count()});
}

Var SparseQuantileNetwork::raw_params(Tape& tape,
                                      const std::vector<std::vector<double>>& x_past) const {
    const PatchEmbedding pe = patch(x_past, cfg_.patch_len);
    Var patches = make_var(pe.patches);
    Var embedded = tanh_op(tape, linear(tape, patches, embed_w_, embed_b_));
    Var pooled = mean_rows(tape, embedded);
    Var h = pooled;
    for (std::size_t l = 0; l < mlp_w_.size(); ++l) {
        h = tanh_op(tape, linear(tape, h, mlp_w_[l], mlp_b_[l]));
    }
    return linear(tape, h, head_w_, head_b_);
}

SparseParams SparseQuantileNetwork::params(const std::vector<std::vector<double>>& x_past) const {
    Tape tape;
    Var raw = raw_params(tape, x_past);
    SparseParams p;
    p.family = cfg_.family;
    if (cfg_.family == SparseFamily::Exponential) {
        p.theta = softplus(raw->v[0]);
    } else {
        p.mu_s = raw->v[0];
        p.sigma_s = softplus(raw->v[1]);
    }
    return p;
}

Var sparse_quantile_matrix(Tape& tape, const Var& raw_params, SparseFamily family,
                           const HorizonSpec& horizon, const std::vector<double>& quantiles) {
    if (family == SparseFamily::Gamma) {
        throw unsupported_family_error(
            "gamma quantiles need sample-path generation, which is unsupported");
    }
    const std::size_t H = horizon.pairs.size();
    const std::size_t Q = quantiles.size();
    for (double q : quantiles) {
        if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("sparse arm: quantile outside (0,1)");
    }
    const double max_span = static_cast<double>(horizon.max_span);

    auto out = make_var(Tensor({H, Q}));
    out->ensure_grad();
    raw_params->ensure_grad();

    if (family == SparseFamily::Exponential) {
        const double raw = raw_params->v[0];
        const double theta = softplus(raw);
        for (std::size_t h = 0; h < H; ++h) {
            const double ratio = static_cast<double>(horizon.pairs[h].span) / max_span;
            for (std::size_t qi = 0; qi < Q; ++qi) {
                if (quantiles[qi] <= 0.5) continue; // forced zero
                out->v[h * Q + qi] = -ratio * theta * std::log1p(-quantiles[qi]);
            }
        }
        tape.record([raw_params, out, horizon, quantiles, max_span, raw, H, Q]() {
            const double dtheta_draw = softplus_grad(raw);
            double acc = 0.0;
            for (std::size_t h = 0; h < H; ++h) {
                const double ratio = static_cast<double>(horizon.pairs[h].span) / max_span;
                for (std::size_t qi = 0; qi < Q; ++qi) {
                    if (quantiles[qi] <= 0.5) continue;
                    acc += out->g[h * Q + qi] * (-ratio * std::log1p(-quantiles[qi]));
                }
            }
            raw_params->g[0] += acc * dtheta_draw;
        });
        return out;
    }

    // Truncated normal. The aggregate mean is clamped at zero before
    // disaggregation; with q > 0.5 the resulting quantile is already
    // non-negative and non-decreasing in span.
    const double raw_mu = raw_params->v[0];
    const double raw_sigma = raw_params->v[1];
    const double mu_pos = std::max(raw_mu, 0.0);
    const double sigma = softplus(raw_sigma);
    for (std::size_t h = 0; h < H; ++h) {
        const double ratio = static_cast<double>(horizon.pairs[h].span) / max_span;
        for (std::size_t qi = 0; qi < Q; ++qi) {
            if (quantiles[qi] <= 0.5) continue;
            const double z = normal_icdf(quantiles[qi]);
            out->v[h * Q + qi] = std::max(0.0, mu_pos * ratio + sigma * std::sqrt(ratio) * z);
        }
    }
    tape.record([raw_params, out, horizon, quantiles, max_span, raw_mu, raw_sigma, mu_pos, sigma,
                 H, Q]() {
        double acc_mu = 0.0;
        double acc_sigma = 0.0;
        for (std::size_t h = 0; h < H; ++h) {
            const double ratio = static_cast<double>(horizon.pairs[h].span) / max_span;
            for (std::size_t qi = 0; qi < Q; ++qi) {
                if (quantiles[qi] <= 0.5) continue;
                const double z = normal_icdf(quantiles[qi]);
                const double pre = mu_pos * ratio + sigma * std::sqrt(ratio) * z;
                if (pre <= 0.0) continue; // clipped; zero subgradient
                const double gy = out->g[h * Q + qi];
                if (raw_mu > 0.0) acc_mu += gy * ratio;
                acc_sigma += gy * std::sqrt(ratio) * z;
            }
        }
        raw_params->g[0] += acc_mu;
        raw_params->g[1] += acc_sigma * softplus_grad(raw_sigma);
    });
    return out;
}

std::vector<std::vector<double>> sparse_forecast(const SparseQuantileNetwork& net,
                                                 const std::vector<std::vector<double>>& x_past,
                                                 const HorizonSpec& horizon,
                                                 const std::vector<double>& quantiles) {
    Tape tape;
    Var raw = net.raw_params(tape, x_past);
    Var matrix = sparse_quantile_matrix(tape, raw, net.config().family, horizon, quantiles);
    std::vector<std::vector<double>> out(horizon.pairs.size(),
                                         std::vector<double>(quantiles.size(), 0.0));
    for (std::size_t h = 0; h < horizon.pairs.size(); ++h) {
        for (std::size_t qi = 0; qi < quantiles.size(); ++qi) {
            out[h][qi] = matrix->v[h * quantiles.size() + qi];
        }
    }
    return out;
}

} // namespace spades
