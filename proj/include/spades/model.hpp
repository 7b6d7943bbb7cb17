#pragma once

#include "spades/adam.hpp"
#include "spades/encoder.hpp"
#include "spades/metrics.hpp"
#include "spades/params.hpp"
#include "spades/series.hpp"
#include "spades/sparse_arm.hpp"

#include <json.hpp>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace spades {

struct TrainConfig {
    double lr = 0.01;
    std::size_t batch_size = 32;
    std::size_t epochs = 20;
    std::size_t steps_per_epoch = 10;
    std::uint64_t seed = 1;        // mandatory; all training randomness derives from it
    double sampling_cutoff = 0.8;  // importance-sampling cutoff quantile
    std::size_t min_history = 13;  // earliest fcd sampled during training
    // fcds during training only use targets before this period
    // (0 = full series length).
    std::size_t train_period_end = 0;
};

struct ModelConfig {
    EncoderConfig encoder;
    std::vector<int> decoder_hidden = {32, 32};
    SparseNetConfig sparse;
    bool sparse_arm_enabled = true;
    // Rule-based override: sparse-routed series forecast zero at every
    // quantile instead of using the sparse network.
    bool zero_override = false;
    std::vector<double> quantiles = {0.5, 0.9};
    HorizonSpec horizon;
    int routing_window = 52;
    int context_len = 104; // encoder/patch input window, capped at fcd+1
    PeakFilterConfig peak;
    std::size_t past_cov_dim = 2;
    std::size_t future_cov_dim = 2;
    std::size_t static_cov_dim = 2;
    TrainConfig train;

    void validate() const;
    bool routing_active() const { return sparse_arm_enabled || zero_override; }
};

nlohmann::json model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

/// Index partition of a batch into sparse / non-sparse series at an fcd.
struct Routing {
    std::vector<std::size_t> sparse;
    std::vector<std::size_t> dense;
};

/// SPADE-S: sparsity routing in front of a peak-filtered multi-head
/// convolutional main arm and a parametric sparse quantile arm, trained
/// jointly on a multi-quantile pinball objective.
class SpadeSModel {
public:
    explicit SpadeSModel(ModelConfig cfg);

    const ModelConfig& config() const { return cfg_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    const std::vector<double>& loss_trace() const { return loss_trace_; }

    /// Partition by is_sparse at fcd with the configured routing window.
    Routing route(const std::vector<TimeSeriesRecord>& batch, long long fcd) const;

    /// Forecast matrix [H][Q] for one series at one fcd.
    std::vector<std::vector<double>> forward_point(const TimeSeriesRecord& rec,
                                                   long long fcd) const;

    /// Minimizes the span-normalized multi-quantile loss over sampled
    /// (series, fcd) pairs drawn by magnitude importance weights.
    /// Deterministic given the config seed and fixed chunking.
    void train(const std::vector<TimeSeriesRecord>& dataset);

    /// Forward over all (series, fcd) pairs; categories are assigned at
    /// each fcd. fcds must leave room for the full horizon.
    QuantileForecast evaluate(const std::vector<TimeSeriesRecord>& dataset,
                              const std::vector<long long>& fcds) const;

    void save_checkpoint(const std::string& path) const;
    static SpadeSModel load_checkpoint(const std::string& path);

    /// Central finite differences against reverse-mode through the full
    /// routed objective (forecast + span-normalized pinball loss) at one
    /// point; returns the max relative error over all parameters.
    double grad_check_point(const TimeSeriesRecord& rec, long long fcd,
                            double epsilon = 1e-6);

    /// Span-aggregated actual: sum of target over the horizon window.
    static double span_target(const TimeSeriesRecord& rec, long long fcd, const HorizonPair& h);

    SpadeSModel(const SpadeSModel&) = delete;
    SpadeSModel& operator=(const SpadeSModel&) = delete;
    SpadeSModel(SpadeSModel&&) = default;
    SpadeSModel& operator=(SpadeSModel&&) = default;

private:
    /// Parameter views for one store (the model's own or a clone used
    /// for chunked gradient accumulation).
    struct Arms {
        std::optional<MultiHeadEncoder> encoder;
        std::optional<MomentGate> gate;
        std::vector<Var> dec_w, dec_b; // hidden layers, then the output layer
        std::optional<SparseQuantileNetwork> sparse;
    };

    Arms build_arms(ParamStore& store, ParamInit mode) const;
    Var decode_matrix(Tape& tape, const Arms& arms, const TimeSeriesRecord& rec,
                      long long fcd) const;
    Var point_preds(Tape& tape, const Arms& arms, const TimeSeriesRecord& rec, long long fcd,
                    bool sparse_route) const;
    Var point_objective(Tape& tape, const Arms& arms, const TimeSeriesRecord& rec,
                        long long fcd, double scale) const;
    std::vector<std::vector<double>> history_window(const TimeSeriesRecord& rec, long long fcd,
                                                    bool filtered) const;

    ModelConfig cfg_;
    ParamStore params_;
    Arms arms_;
    std::vector<double> loss_trace_;
};

} // namespace spades
