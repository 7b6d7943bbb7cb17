#pragma once

#include "spades/params.hpp"
#include "spades/series.hpp"
#include "spades/tape.hpp"

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace spades {

class unsupported_family_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class SparseFamily { Exponential, TruncatedNormal, Gamma };

const char* family_name(SparseFamily f);
SparseFamily family_from_name(const std::string& name);

/// Non-overlapping contiguous patches of a [T][F] history, oldest first.
/// The final partial patch is zero-padded and flagged.
struct PatchEmbedding {
    Tensor patches;            // [P, patch_len * F]
    std::vector<bool> padded;  // per patch
};

PatchEmbedding patch(const std::vector<std::vector<double>>& x_past, std::size_t patch_len);

/// Exponential quantile at scale h(span, theta) = (span / max_span) * theta:
/// -h * ln(1 - q). Strictly increasing in q, linear in span.
double exp_icdf(double q, double span, double max_span, double theta);

/// Quantile of one of n_spans i.i.d. pieces of an aggregate
/// N(mu_s, sigma_s^2): max(0, mu_s/n + sigma_s/sqrt(n) * Phi^{-1}(q)).
double truncnorm_icdf(double q, double n_spans, double mu_s, double sigma_s);

/// Sum of independent Gamma(k_i, theta) variables: Gamma(sum k_i, theta).
std::pair<double, double> gamma_aggregate(const std::vector<double>& shapes, double theta);

/// Shape for a sub-span under shape-proportional-to-span disaggregation.
double gamma_disaggregate_shape(double k_total, double span, double max_span);

/// Distribution parameters produced by the network, post-link.
struct SparseParams {
    SparseFamily family = SparseFamily::Exponential;
    double theta = 0.0;    // exponential scale at max span
    double mu_s = 0.0;     // truncated-normal aggregate mean
    double sigma_s = 0.0;  // truncated-normal aggregate sd
};

struct SparseNetConfig {
    SparseFamily family = SparseFamily::Exponential;
    std::size_t patch_len = 13;
    std::size_t embed_dim = 16;
    std::vector<int> hidden = {16};

    std::size_t param_count() const { return family == SparseFamily::Exponential ? 1 : 2; }
};

/// The sparse quantile network: patched MLP -> distribution parameters ->
/// closed-form ICDF per horizon. Scale outputs (theta, sigma_s) pass
/// through softplus; mu_s is unconstrained.
class SparseQuantileNetwork {
public:
    SparseQuantileNetwork(const SparseNetConfig& cfg, std::size_t features, ParamStore& store,
                          const std::string& prefix, ParamInit mode = ParamInit::Create);

    const SparseNetConfig& config() const { return cfg_; }

    /// Raw (pre-link) parameter head over the patched history.
    Var raw_params(Tape& tape, const std::vector<std::vector<double>>& x_past) const;

    /// Post-link parameters as plain numbers (inference convenience).
    SparseParams params(const std::vector<std::vector<double>>& x_past) const;

private:
    SparseNetConfig cfg_;
    std::size_t features_;
    Var embed_w_, embed_b_;
    std::vector<Var> mlp_w_, mlp_b_;
    Var head_w_, head_b_;
};

/// Differentiable [H,Q] quantile matrix from raw network params. Applies
/// the links, forces quantiles q <= 0.5 to zero and span-disaggregates
/// the distribution parameters. The truncated-normal mean is clamped at
/// zero before use so forecasts stay monotone in span.
Var sparse_quantile_matrix(Tape& tape, const Var& raw_params, SparseFamily family,
                           const HorizonSpec& horizon, const std::vector<double>& quantiles);

/// Inference-path forecast for one history: [H][Q] values.
/// Throws unsupported_family_error for the gamma family (its ICDF needs
/// sample paths, which are out of scope).
std::vector<std::vector<double>> sparse_forecast(const SparseQuantileNetwork& net,
                                                 const std::vector<std::vector<double>>& x_past,
                                                 const HorizonSpec& horizon,
                                                 const std::vector<double>& quantiles);

} // namespace spades
