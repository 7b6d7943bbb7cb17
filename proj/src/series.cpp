#include "spades/series.hpp"

#include "spades/csv.hpp"
#include "spades/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace spades {

void TimeSeriesRecord::validate() const {
    if (target.size() != past_cov.size()) {
        throw std::invalid_argument("record " + id + ": target/past_cov length mismatch");
    }
    long long first_nonzero = -1;
    for (std::size_t t = 0; t < target.size(); ++t) {
        if (target[t] < 0.0 || !std::isfinite(target[t])) {
            throw std::invalid_argument("record " + id + ": negative or non-finite target");
        }
        if (first_nonzero < 0 && target[t] > 0.0) first_nonzero = static_cast<long long>(t);
    }
    if (first_nonzero >= 0 && first_listing > first_nonzero) {
        throw std::invalid_argument("record " + id + ": demand precedes first_listing");
    }
}

std::vector<int> HorizonSpec::span1_leads() const {
    std::vector<int> leads;
    for (const auto& p : pairs) {
        if (p.span == 1) leads.push_back(p.lead_time);
    }
    return leads;
}

int HorizonSpec::max_lead() const {
    int m = 0;
    for (const auto& p : pairs) m = std::max(m, p.lead_time + p.span - 1);
    return m;
}

void HorizonSpec::validate() const {
    if (pairs.empty()) throw std::invalid_argument("horizon: no pairs");
    int ms = 0;
    bool any_span1 = false;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& p = pairs[i];
        if (p.lead_time < 1 || p.span < 1) {
            throw std::invalid_argument("horizon: lead_time and span must be >= 1");
        }
        ms = std::max(ms, p.span);
        any_span1 |= (p.span == 1);
        for (std::size_t j = i + 1; j < pairs.size(); ++j) {
            if (pairs[j] == p) throw std::invalid_argument("horizon: duplicate pair");
        }
    }
    if (!any_span1) throw std::invalid_argument("horizon: span-1 subset is empty");
    if (ms != max_span) throw std::invalid_argument("horizon: max_span out of date");
}

HorizonSpec build_horizon_grid(int max_lead, const std::vector<int>& spans) {
    if (max_lead < 1) throw std::invalid_argument("build_horizon_grid: max_lead must be >= 1");
    if (spans.empty()) throw std::invalid_argument("build_horizon_grid: spans empty");
    HorizonSpec spec;
    for (int span : spans) {
        if (span < 1) throw std::invalid_argument("build_horizon_grid: span must be >= 1");
        for (int lead = 1; lead + span - 1 <= max_lead; ++lead) {
            spec.pairs.push_back({lead, span});
        }
    }
    if (spec.pairs.empty()) {
        throw std::invalid_argument("build_horizon_grid: contradictory inputs yield no pairs");
    }
    spec.max_span = 0;
    for (const auto& p : spec.pairs) spec.max_span = std::max(spec.max_span, p.span);
    spec.validate();
    return spec;
}

const char* category_name(MagnitudeCategory c) {
    switch (c) {
        case MagnitudeCategory::SuperFast: return "SuperFast";
        case MagnitudeCategory::Fast: return "Fast";
        case MagnitudeCategory::Medium: return "Medium";
        case MagnitudeCategory::Slow: return "Slow";
        case MagnitudeCategory::SuperSlow: return "SuperSlow";
        case MagnitudeCategory::Zero: return "Zero";
    }
    return "?";
}

MagnitudeCategory category_from_name(const std::string& name) {
    static const std::map<std::string, MagnitudeCategory> lut = {
        {"SuperFast", MagnitudeCategory::SuperFast}, {"Fast", MagnitudeCategory::Fast},
        {"Medium", MagnitudeCategory::Medium},       {"Slow", MagnitudeCategory::Slow},
        {"SuperSlow", MagnitudeCategory::SuperSlow}, {"Zero", MagnitudeCategory::Zero}};
    const auto it = lut.find(name);
    if (it == lut.end()) throw std::invalid_argument("unknown category: " + name);
    return it->second;
}

MagnitudeCategory categorize_magnitude(double trailing_agg) {
    if (trailing_agg < 0.0 || !std::isfinite(trailing_agg)) {
        throw std::invalid_argument("categorize_magnitude: aggregate must be >= 0");
    }
    if (trailing_agg == 0.0) return MagnitudeCategory::Zero;
    if (trailing_agg <= 2.0) return MagnitudeCategory::SuperSlow;
    if (trailing_agg <= 52.0) return MagnitudeCategory::Slow;
    if (trailing_agg <= 365.0) return MagnitudeCategory::Medium;
    if (trailing_agg <= 10000.0) return MagnitudeCategory::Fast;
    return MagnitudeCategory::SuperFast;
}

double trailing_aggregate(const TimeSeriesRecord& rec, long long fcd, int window) {
    if (fcd < 0 || fcd >= static_cast<long long>(rec.length())) {
        throw std::invalid_argument("trailing_aggregate: fcd out of range");
    }
    if (window < 1) throw std::invalid_argument("trailing_aggregate: window must be >= 1");
    const long long lo = std::max<long long>(0, fcd - window + 1);
    double sum = 0.0;
    for (long long t = lo; t <= fcd; ++t) sum += rec.target[static_cast<std::size_t>(t)];
    return sum;
}

bool is_sparse(const TimeSeriesRecord& rec, long long fcd, int window) {
    const double agg = trailing_aggregate(rec, fcd, window); // validates fcd/window
    if (agg > 0.0) return false;
    return rec.first_listing <= fcd - window;
}

std::vector<double> gen_poisson_sparse(double rate, std::size_t length, double sparsity,
                                       std::uint64_t seed) {
    if (rate <= 0.0) throw std::invalid_argument("gen_poisson_sparse: rate must be positive");
    if (length < 1) throw std::invalid_argument("gen_poisson_sparse: length must be >= 1");
    if (!(sparsity >= 0.0 && sparsity < 1.0)) {
        throw std::invalid_argument("gen_poisson_sparse: sparsity must lie in [0,1)");
    }
    Rng rng(seed);
    std::vector<double> out(length);
    for (auto& v : out) v = static_cast<double>(rng.poisson(rate));
    const std::size_t zeros = static_cast<std::size_t>(sparsity * static_cast<double>(length));
    for (std::size_t i : rng.sample_without_replacement(length, zeros)) out[i] = 0.0;
    return out;
}

SamplingWeights importance_weights(const std::vector<double>& magnitudes,
                                   double cutoff_quantile) {
    if (magnitudes.empty()) throw std::invalid_argument("importance_weights: no series");
    if (!(cutoff_quantile > 0.0 && cutoff_quantile < 1.0)) {
        throw std::invalid_argument("importance_weights: cutoff must lie in (0,1)");
    }
    for (double m : magnitudes) {
        if (m < 0.0 || !std::isfinite(m)) {
            throw std::invalid_argument("importance_weights: magnitudes must be >= 0");
        }
    }
    // Nearest-rank empirical quantile.
    std::vector<double> sorted = magnitudes;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t rank = static_cast<std::size_t>(
        std::ceil(cutoff_quantile * static_cast<double>(sorted.size())));
    double cutoff = sorted[std::min(sorted.size() - 1, std::max<std::size_t>(rank, 1) - 1)];

    if (cutoff <= 0.0) {
        // Degenerate cutoff: fall back to the smallest positive magnitude,
        // or to uniform weights when all magnitudes are zero.
        double smallest_positive = 0.0;
        for (double m : sorted) {
            if (m > 0.0) { smallest_positive = m; break; }
        }
        cutoff = smallest_positive > 0.0 ? smallest_positive : 1.0;
    }

    SamplingWeights w;
    w.cutoff_quantile = cutoff_quantile;
    w.cutoff_magnitude = cutoff;
    w.weights.resize(magnitudes.size());
    for (std::size_t i = 0; i < magnitudes.size(); ++i) {
        w.weights[i] = std::max(magnitudes[i], cutoff);
    }
    return w;
}

namespace {

struct CategoryBounds {
    double lo; // exclusive
    double hi; // inclusive (SuperFast open above; capped for generation)
};

CategoryBounds category_bounds(MagnitudeCategory c) {
    switch (c) {
        case MagnitudeCategory::SuperSlow: return {0.0, 2.0};
        case MagnitudeCategory::Slow: return {2.0, 52.0};
        case MagnitudeCategory::Medium: return {52.0, 365.0};
        case MagnitudeCategory::Fast: return {365.0, 10000.0};
        case MagnitudeCategory::SuperFast: return {10000.0, 40000.0};
        case MagnitudeCategory::Zero: return {0.0, 0.0};
    }
    return {0.0, 0.0};
}

void fill_covariates(TimeSeriesRecord& rec, const DatasetConfig& cfg, Rng& rng) {
    const std::size_t total = cfg.total_len();
    const double wk = 2.0 * std::numbers::pi / 52.0;
    rec.past_cov.assign(total, std::vector<double>(cfg.past_cov_dim, 0.0));
    for (std::size_t t = 0; t < total; ++t) {
        for (std::size_t k = 0; k < cfg.past_cov_dim; ++k) {
            if (k == 0) rec.past_cov[t][k] = std::sin(wk * static_cast<double>(t));
            else if (k == 1) rec.past_cov[t][k] = std::cos(wk * static_cast<double>(t));
            else rec.past_cov[t][k] = rng.normal();
        }
    }
    rec.future_cov.assign(total, std::vector<std::vector<double>>(
                                     cfg.future_cov_dim,
                                     std::vector<double>(static_cast<std::size_t>(cfg.max_future_lead), 0.0)));
    for (std::size_t t = 0; t < total; ++t) {
        for (int lead = 1; lead <= cfg.max_future_lead; ++lead) {
            const double u = static_cast<double>(t) + static_cast<double>(lead);
            for (std::size_t f = 0; f < cfg.future_cov_dim; ++f) {
                const double harmonic = 1.0 + std::floor(static_cast<double>(f) / 2.0);
                const double phase = wk * harmonic * u;
                rec.future_cov[t][f][static_cast<std::size_t>(lead - 1)] =
                    (f % 2 == 0) ? std::sin(phase) : std::cos(phase);
            }
        }
    }
    rec.static_cov.resize(cfg.static_cov_dim);
    for (auto& s : rec.static_cov) s = rng.normal();
}

// Burst-cycle series for the Zero category: demand bursts separated by
// quiet gaps of window + U{1..kMaxGapExtra} periods, phased so one gap
// covers the categorization window exactly. The backtest resurgence is
// simply the next burst of the same process (dropped with probability
// 1 - resurge_prob), so the dormancy/reawakening law is identical inside
// and outside the training range.
constexpr long long kMaxGapExtra = 26;

void fill_zero_series(TimeSeriesRecord& rec, const DatasetConfig& cfg,
                      const CategoryBlock& block, Rng& rng) {
    const std::size_t total = cfg.total_len();
    rec.target.assign(total, 0.0);
    const long long hist = static_cast<long long>(cfg.history_len);
    const long long window = cfg.window;
    const long long len = std::max(block.burst_len, 1);

    auto emit_burst = [&](long long start) {
        for (long long t = std::max<long long>(0, start);
             t < std::min<long long>(static_cast<long long>(total), start + len); ++t) {
            rec.target[static_cast<std::size_t>(t)] =
                static_cast<double>(rng.poisson(block.burst_rate));
        }
    };

    // Gap that covers the trailing window: the last historical burst ends
    // at hist - window - 1 - u and the next burst starts at or after hist.
    const long long g0 = 1 + static_cast<long long>(rng.uniform_index(kMaxGapExtra));
    const long long u = static_cast<long long>(rng.uniform_index(static_cast<std::uint64_t>(g0 + 1)));
    const long long last_end = hist - window - 1 - u;
    const long long resurge_start = last_end + 1 + window + g0;

    if (cfg.backtest_len > 0 && rng.uniform() < block.resurge_prob) {
        emit_burst(resurge_start);
    }

    long long end = last_end;
    while (end >= 0) {
        emit_burst(end - len + 1);
        const long long extra = 1 + static_cast<long long>(rng.uniform_index(kMaxGapExtra));
        end = end - len - window - extra;
    }
}

void fill_active_series(TimeSeriesRecord& rec, const DatasetConfig& cfg,
                        const CategoryBlock& block, Rng& rng) {
    const std::size_t total = cfg.total_len();
    rec.target.assign(total, 0.0);
    const auto bounds = category_bounds(block.category);

    // Trailing aggregate target, jittered in log space and clamped into
    // the (lo, hi] bucket so the realized category is exact.
    double agg = block.base_agg * std::exp(rng.uniform(-0.3, 0.3));
    agg = std::clamp(std::round(agg), std::floor(bounds.lo) + 1.0, bounds.hi);
    const auto units = static_cast<std::size_t>(agg);

    // Exact multinomial placement inside the trailing window ...
    const std::size_t window_start = cfg.history_len - static_cast<std::size_t>(cfg.window);
    for (std::size_t u = 0; u < units; ++u) {
        const std::size_t t =
            window_start + rng.uniform_index(static_cast<std::uint64_t>(cfg.window));
        rec.target[t] += 1.0;
    }
    // ... and a rate-matched Poisson elsewhere.
    const double rate = agg / static_cast<double>(cfg.window);
    for (std::size_t t = 0; t < window_start; ++t) {
        rec.target[t] = static_cast<double>(rng.poisson(rate));
    }
    for (std::size_t t = cfg.history_len; t < total; ++t) {
        rec.target[t] = static_cast<double>(rng.poisson(rate));
    }
}

} // namespace

std::vector<TimeSeriesRecord> gen_mixed_magnitude_dataset(const DatasetConfig& config,
                                                          std::uint64_t seed) {
    if (config.categories.empty()) {
        throw std::invalid_argument("gen_mixed_magnitude_dataset: empty config");
    }
    if (config.history_len < static_cast<std::size_t>(config.window)) {
        throw std::invalid_argument("gen_mixed_magnitude_dataset: history shorter than window");
    }
    Rng root(seed);
    std::vector<TimeSeriesRecord> out;
    std::size_t serial = 0;
    for (const auto& block : config.categories) {
        if (block.category != MagnitudeCategory::Zero && block.base_agg <= 0.0) {
            throw std::invalid_argument("gen_mixed_magnitude_dataset: base_agg must be positive");
        }
        for (std::size_t i = 0; i < block.count; ++i, ++serial) {
            Rng rng = root.fork(serial);
            TimeSeriesRecord rec;
            char buf[16];
            std::snprintf(buf, sizeof(buf), "S%06zu", serial);
            rec.id = buf;
            rec.first_listing = 0;
            if (block.category == MagnitudeCategory::Zero) {
                fill_zero_series(rec, config, block, rng);
            } else {
                fill_active_series(rec, config, block, rng);
            }
            fill_covariates(rec, config, rng);
            rec.validate();
            out.push_back(std::move(rec));
        }
    }
    return out;
}

void write_dataset_csv(const std::vector<TimeSeriesRecord>& dataset, const std::string& dir) {
    if (dataset.empty()) throw std::invalid_argument("write_dataset_csv: empty dataset");
    const std::size_t dp = dataset.front().past_cov.empty() ? 0 : dataset.front().past_cov[0].size();
    const std::size_t ds = dataset.front().static_cov.size();

    std::ostringstream main;
    main << "series_id,t,y,first_listing";
    for (std::size_t k = 0; k < dp; ++k) main << ",p_" << k;
    for (std::size_t k = 0; k < ds; ++k) main << ",s_" << k;
    main << "\n";
    for (const auto& rec : dataset) {
        for (std::size_t t = 0; t < rec.length(); ++t) {
            main << rec.id << ',' << t << ',' << format_double(rec.target[t]) << ','
                 << rec.first_listing;
            for (std::size_t k = 0; k < dp; ++k) main << ',' << format_double(rec.past_cov[t][k]);
            for (std::size_t k = 0; k < ds; ++k) main << ',' << format_double(rec.static_cov[k]);
            main << "\n";
        }
    }
    write_text_file(dir + "/dataset.csv", main.str());

    const std::size_t df = dataset.front().future_cov.empty()
                               ? 0
                               : dataset.front().future_cov[0].size();
    std::ostringstream fut;
    fut << "series_id,t,horizon_t";
    for (std::size_t k = 0; k < df; ++k) fut << ",f_" << k;
    fut << "\n";
    for (const auto& rec : dataset) {
        const std::size_t total = rec.length();
        for (std::size_t t = 0; t < rec.future_cov.size(); ++t) {
            const std::size_t leads = rec.future_cov[t].empty() ? 0 : rec.future_cov[t][0].size();
            for (std::size_t lead = 1; lead <= leads; ++lead) {
                if (t + lead >= total) continue; // horizon beyond the data
                fut << rec.id << ',' << t << ',' << (t + lead);
                for (std::size_t k = 0; k < df; ++k) {
                    fut << ',' << format_double(rec.future_cov[t][k][lead - 1]);
                }
                fut << "\n";
            }
        }
    }
    write_text_file(dir + "/future_cov.csv", fut.str());
}

std::vector<TimeSeriesRecord> read_dataset_csv(const std::string& dir) {
    const CsvTable main = read_csv(dir + "/dataset.csv");
    const std::size_t c_id = main.column("series_id");
    const std::size_t c_t = main.column("t");
    const std::size_t c_y = main.column("y");
    const std::size_t c_fl = main.column("first_listing");
    std::vector<std::size_t> c_p, c_s;
    for (std::size_t k = 0;; ++k) {
        const std::string name = "p_" + std::to_string(k);
        const auto it = std::find(main.header.begin(), main.header.end(), name);
        if (it == main.header.end()) break;
        c_p.push_back(static_cast<std::size_t>(it - main.header.begin()));
    }
    for (std::size_t k = 0;; ++k) {
        const std::string name = "s_" + std::to_string(k);
        const auto it = std::find(main.header.begin(), main.header.end(), name);
        if (it == main.header.end()) break;
        c_s.push_back(static_cast<std::size_t>(it - main.header.begin()));
    }

    std::vector<TimeSeriesRecord> out;
    for (const auto& row : main.rows) {
        const std::string& id = row[c_id];
        if (out.empty() || out.back().id != id) {
            TimeSeriesRecord rec;
            rec.id = id;
            rec.first_listing = parse_int(row[c_fl]);
            rec.static_cov.reserve(c_s.size());
            for (std::size_t c : c_s) rec.static_cov.push_back(parse_double(row[c]));
            out.push_back(std::move(rec));
        }
        TimeSeriesRecord& rec = out.back();
        const auto t = static_cast<std::size_t>(parse_int(row[c_t]));
        if (t != rec.target.size()) {
            throw std::runtime_error("dataset.csv: non-contiguous periods for " + id);
        }
        rec.target.push_back(parse_double(row[c_y]));
        std::vector<double> p(c_p.size());
        for (std::size_t k = 0; k < c_p.size(); ++k) p[k] = parse_double(row[c_p[k]]);
        rec.past_cov.push_back(std::move(p));
    }

    const CsvTable fut = read_csv(dir + "/future_cov.csv");
    const std::size_t f_id = fut.column("series_id");
    const std::size_t f_t = fut.column("t");
    const std::size_t f_h = fut.column("horizon_t");
    std::vector<std::size_t> c_f;
    for (std::size_t k = 0;; ++k) {
        const std::string name = "f_" + std::to_string(k);
        const auto it = std::find(fut.header.begin(), fut.header.end(), name);
        if (it == fut.header.end()) break;
        c_f.push_back(static_cast<std::size_t>(it - fut.header.begin()));
    }
    std::size_t max_lead = 1;
    for (const auto& row : fut.rows) {
        const auto t = static_cast<std::size_t>(parse_int(row[f_t]));
        const auto h = static_cast<std::size_t>(parse_int(row[f_h]));
        if (h <= t) throw std::runtime_error("future_cov.csv: horizon_t must exceed t");
        max_lead = std::max(max_lead, h - t);
    }
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < out.size(); ++i) {
        index[out[i].id] = i;
        out[i].future_cov.assign(out[i].length(),
                                 std::vector<std::vector<double>>(
                                     c_f.size(), std::vector<double>(max_lead, 0.0)));
    }
    for (const auto& row : fut.rows) {
        const auto it = index.find(row[f_id]);
        if (it == index.end()) throw std::runtime_error("future_cov.csv: unknown series " + row[f_id]);
        TimeSeriesRecord& rec = out[it->second];
        const auto t = static_cast<std::size_t>(parse_int(row[f_t]));
        const auto lead = static_cast<std::size_t>(parse_int(row[f_h])) - t;
        for (std::size_t k = 0; k < c_f.size(); ++k) {
            rec.future_cov[t][k][lead - 1] = parse_double(row[c_f[k]]);
        }
    }
    for (auto& rec : out) rec.validate();
    return out;
}

} // namespace spades
