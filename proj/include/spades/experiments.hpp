#pragma once

#include "spades/model.hpp"
#include "spades/series.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace spades {

// ---- Appendix-style collapse simulation -----------------------------------

struct CollapseConfig {
    std::size_t history_len = 100;
    double rate = 5.0;           // Poisson rate of the base process
    std::size_t horizon = 20;
    std::size_t n_paths = 500;
    std::size_t kernel_lags = 24;
    double kernel_decay = 0.85;  // per-lag exponential decay, normalized
    std::size_t kernel_channels = 2; // output channels, averaged for mu
    std::size_t sigma_obs = 30;  // recent non-zero observations for sigma
};

/// Result for one sparsity level: percentile bands of the Monte-Carlo
/// forecast plus a same-sparsity future trajectory overlay.
struct CollapseLevelResult {
    double sparsity = 0.0;
    std::vector<double> history;
    std::vector<double> future;
    double mu = 0.0;          // last convolved value + fitted bias
    double sigma_raw = 0.0;   // sd of the recent non-zero observations
    double sigma = 0.0;       // level-scaled sd actually used for paths
    bool sigma_fallback = false;
    std::vector<double> p10, p50, p90, width;

    double median_width() const;
};

/// Forecast-collapse simulation: a normalized exponentially-weighted
/// causal convolution provides the level mu; the path spread couples the
/// recent non-zero variability to that level (sd * mu / mean of the
/// recent non-zero observations), which is what makes the band collapse
/// toward zero as sparsity rises. Paths are mu + sigma * z clipped at 0.
std::vector<CollapseLevelResult> run_collapse_sim(const std::vector<double>& s_levels,
                                                  std::uint64_t seed,
                                                  const CollapseConfig& cfg = {});

std::string collapse_percentiles_csv(const std::vector<CollapseLevelResult>& results);
std::string collapse_history_csv(const std::vector<CollapseLevelResult>& results);
std::string collapse_summary_json(const std::vector<CollapseLevelResult>& results);

// ---- Experiment plumbing ---------------------------------------------------

struct ExperimentConfig {
    DatasetConfig dataset;
    ModelConfig model;        // horizon filled from the config file
    std::size_t eval_fcd_count = 3;

    /// Evenly spaced backtest fcds starting at the last training period.
    std::vector<long long> eval_fcds() const;
    void validate() const;
};

nlohmann::json dataset_config_to_json(const DatasetConfig& cfg);
DatasetConfig dataset_config_from_json(const nlohmann::json& j);
nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg);
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::string& path);

/// Appendix-style ablation variants, mapped onto config deltas:
///   v9  single head, no sparse arm (baseline)
///   v11 v9 + rule-based zero override for sparse series
///   v13 moment-gated 6-head encoder, no sparse arm
///   v15 single head + truncated-normal sparse arm
///   v16 moment-gated multi-head + truncated-normal sparse arm
///   v17 single head + exponential sparse arm
///   v18 moment-gated multi-head + exponential sparse arm
///   v19 full model (multi-head concat-linear + exponential sparse arm)
ModelConfig apply_variant(ModelConfig base, const std::string& variant_id);

/// Trains one configuration on one seeded dataset and reports by
/// category over the backtest fcds.
std::vector<BiasReport> train_and_report(const ExperimentConfig& cfg, const ModelConfig& model_cfg,
                                         std::uint64_t seed,
                                         const std::vector<BiasReport>* baseline = nullptr);

struct AblationRun {
    std::uint64_t seed = 0;
    std::string variant;
    std::vector<BiasReport> report;
};

struct AblationResult {
    std::vector<AblationRun> runs;
    /// Medians across seeds of wql and delta-vs-baseline per
    /// (variant, category, quantile).
    struct SummaryRow {
        std::string variant;
        std::string category;
        double quantile = 0.0;
        double median_wql = 0.0;
        std::optional<double> median_delta_pct;
    };
    std::vector<SummaryRow> summary;
};

/// Trains every variant on identical per-seed datasets; deltas are
/// against the first variant in the list.
AblationResult run_ablation(const std::vector<std::string>& variants, const ExperimentConfig& cfg,
                            const std::vector<std::uint64_t>& seeds);

std::string ablation_runs_csv(const AblationResult& result);
std::string ablation_summary_csv(const AblationResult& result);
std::string ablation_summary_json(const AblationResult& result);

/// Bias-by-sampling study: two models differing only in the importance
/// sampling cutoff quantile, compared on ob/ub per category.
struct BiasSamplingRow {
    std::uint64_t seed = 0;
    std::string category;
    double quantile = 0.0;
    std::string metric;     // "ob" | "ub"
    double baseline = 0.0;  // cutoff A
    double experiment = 0.0; // cutoff B
    std::optional<double> delta_pct;
};

std::vector<BiasSamplingRow> run_bias_sampling_experiment(const ExperimentConfig& cfg,
                                                          double cutoff_a, double cutoff_b,
                                                          const std::vector<std::uint64_t>& seeds);

std::string bias_sampling_csv(const std::vector<BiasSamplingRow>& rows);

/// WQL per magnitude category for the full model across head counts.
struct HeadSweepRow {
    std::uint64_t seed = 0;
    int heads = 1;
    std::string category;
    double quantile = 0.0;
    std::optional<double> wql;
};

std::vector<HeadSweepRow> head_count_sweep(const std::vector<int>& g_values,
                                           const ExperimentConfig& cfg,
                                           const std::vector<std::uint64_t>& seeds);

std::string head_sweep_csv(const std::vector<HeadSweepRow>& rows);

double median(std::vector<double> values);

} // namespace spades
