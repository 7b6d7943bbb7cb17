#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace spades {

/// One product/series: demand history plus past, known-future and static
/// covariates. Time indices are 0-based periods on a fixed grain.
struct TimeSeriesRecord {
    std::string id;
    std::vector<double> target;                       // demand per period, >= 0
    std::vector<std::vector<double>> past_cov;        // [time][d_p]
    // future_cov[t][f][lead-1]: covariate f of period t+lead, known at t.
    std::vector<std::vector<std::vector<double>>> future_cov;
    std::vector<double> static_cov;                   // [d_s]
    long long first_listing = 0;                      // period of first listing

    std::size_t length() const { return target.size(); }
    void validate() const; // throws std::invalid_argument on broken invariants
};

/// A (lead_time, span) forecast horizon: the window starts lead_time
/// periods after the forecast creation date and covers span periods.
struct HorizonPair {
    int lead_time = 1; // >= 1
    int span = 1;      // >= 1
    bool operator==(const HorizonPair&) const = default;
};

/// The horizon set H with its maximal span (used to normalize the sparse
/// arm's scale). The span-1 subset H1 must be non-empty.
struct HorizonSpec {
    std::vector<HorizonPair> pairs;
    int max_span = 1;

    std::vector<int> span1_leads() const;
    int max_lead() const;
    void validate() const;
};

/// All (lead, span) pairs with lead in [1, max_lead], span in spans and
/// lead + span - 1 <= max_lead.
HorizonSpec build_horizon_grid(int max_lead, const std::vector<int>& spans);

enum class MagnitudeCategory { SuperFast, Fast, Medium, Slow, SuperSlow, Zero };

const char* category_name(MagnitudeCategory c);
MagnitudeCategory category_from_name(const std::string& name);

/// Velocity bucket of a trailing-window demand aggregate:
///   Zero {0}, SuperSlow (0,2], Slow (2,52], Medium (52,365],
///   Fast (365,10000], SuperFast (10000,inf).
MagnitudeCategory categorize_magnitude(double trailing_agg);

/// Sum of target over the trailing `window` periods ending at fcd
/// (inclusive), clipped at the series start.
double trailing_aggregate(const TimeSeriesRecord& rec, long long fcd, int window);

/// A series is sparse at fcd when the trailing window sums to zero and
/// the series is not a new product (listed at least `window` periods
/// before fcd).
bool is_sparse(const TimeSeriesRecord& rec, long long fcd, int window);

/// Poisson(rate) sequence with floor(s * length) entries forced to zero,
/// positions drawn uniformly without replacement. Deterministic per seed.
std::vector<double> gen_poisson_sparse(double rate, std::size_t length, double sparsity,
                                       std::uint64_t seed);

/// Per-series sampling weights: magnitude-proportional above the cutoff
/// quantile, flat at the cutoff magnitude below it.
struct SamplingWeights {
    std::vector<double> weights;  // > 0, unnormalized
    double cutoff_quantile = 0.8;
    double cutoff_magnitude = 0.0;
};

/// weight_i = max(magnitude_i, m*) with m* the empirical cutoff quantile
/// (nearest-rank) of the magnitudes. Degenerate cutoffs (m* == 0) fall
/// back to the smallest positive magnitude, or to uniform weights when
/// every magnitude is zero; never an error.
SamplingWeights importance_weights(const std::vector<double>& magnitudes,
                                   double cutoff_quantile);

/// Synthetic mixed-magnitude dataset configuration. Each block requests
/// `count` series whose trailing aggregate at the reference fcd (the last
/// training period) lands in `category`; `base_agg` is the targeted
/// trailing aggregate. Zero-category series are dormant burst cycles:
/// active bursts separated by quiet gaps longer than the routing window,
/// with a possible resurgence in the backtest segment.
struct CategoryBlock {
    MagnitudeCategory category = MagnitudeCategory::Zero;
    std::size_t count = 0;
    double base_agg = 0.0;      // ignored for Zero
    // Zero-category only:
    double resurge_prob = 0.4;  // chance the next burst lands in the backtest
    double burst_rate = 1.5;    // demand rate inside a burst
    int burst_len = 5;          // periods per burst
};

struct DatasetConfig {
    std::size_t history_len = 130;  // training periods
    std::size_t backtest_len = 26;  // extra periods after training
    std::size_t past_cov_dim = 2;
    std::size_t future_cov_dim = 2;
    std::size_t static_cov_dim = 2;
    int max_future_lead = 8;        // leads covered by future covariates
    int window = 52;                // trailing window for categorization
    std::vector<CategoryBlock> categories;

    std::size_t total_len() const { return history_len + backtest_len; }
};

/// Generates the configured mixture. The trailing aggregate of each
/// series at fcd = history_len - 1 realizes its configured category
/// exactly (unit placement is multinomial inside the window).
std::vector<TimeSeriesRecord> gen_mixed_magnitude_dataset(const DatasetConfig& config,
                                                          std::uint64_t seed);

/// Dataset CSV round trip. `dir` receives dataset.csv (one row per
/// (series, period): series_id,t,y,first_listing,p_*,s_*) and
/// future_cov.csv (series_id,t,horizon_t,f_*).
void write_dataset_csv(const std::vector<TimeSeriesRecord>& dataset, const std::string& dir);
std::vector<TimeSeriesRecord> read_dataset_csv(const std::string& dir);

} // namespace spades
