#include "spades/experiments.hpp"

#include "spades/csv.hpp"
#include "spades/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace spades {

double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median: empty input");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

// Linear-interpolation empirical percentile of a sorted sample.
double percentile_sorted(const std::vector<double>& sorted, double pct) {
    const double pos = pct / 100.0 * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

} // namespace

double CollapseLevelResult::median_width() const {
    return median(width);
}

std::vector<CollapseLevelResult> run_collapse_sim(const std::vector<double>& s_levels,
                                                  std::uint64_t seed, const CollapseConfig& cfg) {
    for (double s : s_levels) {
        if (!(s >= 0.0 && s < 1.0)) {
            throw std::invalid_argument("run_collapse_sim: sparsity must lie in [0,1)");
        }
    }
    Rng root(seed);
    std::vector<CollapseLevelResult> results;
    for (std::size_t li = 0; li < s_levels.size(); ++li) {
        const double s = s_levels[li];
        Rng level_rng = root.fork(li);
        CollapseLevelResult res;
        res.sparsity = s;
        res.history = gen_poisson_sparse(cfg.rate, cfg.history_len, s, level_rng.next_u64());

        // Normalized exponentially-weighted kernel, identical across the
        // output channels; w[0] weights the current step.
        std::vector<double> w(cfg.kernel_lags);
        double wsum = 0.0;
        for (std::size_t k = 0; k < cfg.kernel_lags; ++k) {
            w[k] = std::pow(cfg.kernel_decay, static_cast<double>(k));
            wsum += w[k];
        }
        for (auto& v : w) v /= wsum;

        std::vector<double> conv(cfg.history_len, 0.0);
        for (std::size_t t = 0; t < cfg.history_len; ++t) {
            for (std::size_t k = 0; k < cfg.kernel_lags && k <= t; ++k) {
                conv[t] += w[k] * res.history[t - k];
            }
        }
        // Scalar bias per channel by one least-squares pass matching the
        // convolved output (full-support region) to the history mean.
        double hist_mean = 0.0;
        for (double v : res.history) hist_mean += v;
        hist_mean /= static_cast<double>(cfg.history_len);
        double conv_mean = 0.0;
        std::size_t n_valid = 0;
        for (std::size_t t = cfg.kernel_lags - 1; t < cfg.history_len; ++t, ++n_valid) {
            conv_mean += conv[t];
        }
        conv_mean /= static_cast<double>(n_valid);
        const double bias = hist_mean - conv_mean;

        double mu = 0.0;
        for (std::size_t ch = 0; ch < cfg.kernel_channels; ++ch) {
            mu += conv[cfg.history_len - 1] + bias;
        }
        mu /= static_cast<double>(cfg.kernel_channels);
        res.mu = mu;

        // sd and mean of the most recent non-zero observations.
        std::vector<double> nonzero;
        for (double v : res.history) {
            if (v > 0.0) nonzero.push_back(v);
        }
        if (nonzero.size() > cfg.sigma_obs) {
            nonzero.erase(nonzero.begin(),
                          nonzero.begin() + static_cast<std::ptrdiff_t>(nonzero.size() - cfg.sigma_obs));
        }
        if (nonzero.size() < 2) {
            res.sigma_raw = 0.0;
            res.sigma = 0.0;
            res.sigma_fallback = true;
            std::cerr << "collapse sim: fewer than 2 non-zero observations at s=" << s
                      << "; sigma set to 0\n";
        } else {
            double m = 0.0;
            for (double v : nonzero) m += v;
            m /= static_cast<double>(nonzero.size());
            double var = 0.0;
            for (double v : nonzero) var += (v - m) * (v - m);
            var /= static_cast<double>(nonzero.size() - 1);
            res.sigma_raw = std::sqrt(var);
            // The encoder's spread follows its level estimate: scale the
            // non-zero variability by mu / (non-zero mean). This coupling
            // is what collapses the band at high sparsity.
            res.sigma = res.sigma_raw * std::max(mu, 0.0) / m;
        }

        Rng path_rng = level_rng.fork(1);
        std::vector<std::vector<double>> step_values(cfg.horizon,
                                                     std::vector<double>(cfg.n_paths, 0.0));
        for (std::size_t d = 0; d < cfg.n_paths; ++d) {
            for (std::size_t h = 0; h < cfg.horizon; ++h) {
                step_values[h][d] = std::max(0.0, mu + res.sigma * path_rng.normal());
            }
        }
        for (std::size_t h = 0; h < cfg.horizon; ++h) {
            std::sort(step_values[h].begin(), step_values[h].end());
            res.p10.push_back(percentile_sorted(step_values[h], 10.0));
            res.p50.push_back(percentile_sorted(step_values[h], 50.0));
            res.p90.push_back(percentile_sorted(step_values[h], 90.0));
            res.width.push_back(res.p90.back() - res.p10.back());
        }

        res.future = gen_poisson_sparse(cfg.rate, cfg.horizon, s, level_rng.fork(2).next_u64());
        results.push_back(std::move(res));
    }
    return results;
}

std::string collapse_percentiles_csv(const std::vector<CollapseLevelResult>& results) {
    std::ostringstream out;
    out << "sparsity,step,p10,p50,p90,width,future_y\n";
    for (const auto& r : results) {
        for (std::size_t h = 0; h < r.p10.size(); ++h) {
            out << format_double(r.sparsity) << ',' << h << ',' << format_double(r.p10[h]) << ','
                << format_double(r.p50[h]) << ',' << format_double(r.p90[h]) << ','
                << format_double(r.width[h]) << ',' << format_double(r.future[h]) << "\n";
        }
    }
    return out.str();
}

std::string collapse_history_csv(const std::vector<CollapseLevelResult>& results) {
    std::ostringstream out;
    out << "sparsity,t,y\n";
    for (const auto& r : results) {
        for (std::size_t t = 0; t < r.history.size(); ++t) {
            out << format_double(r.sparsity) << ',' << t << ',' << format_double(r.history[t])
                << "\n";
        }
    }
    return out.str();
}

std::string collapse_summary_json(const std::vector<CollapseLevelResult>& results) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : results) {
        arr.push_back({{"sparsity", r.sparsity},
                       {"mu", r.mu},
                       {"sigma_raw", r.sigma_raw},
                       {"sigma", r.sigma},
                       {"sigma_fallback", r.sigma_fallback},
                       {"median_width", r.median_width()}});
    }
    return arr.dump(2) + "\n";
}

// ---- config plumbing -------------------------------------------------------

std::vector<long long> ExperimentConfig::eval_fcds() const {
    const long long first = static_cast<long long>(dataset.history_len) - 1;
    const long long last = static_cast<long long>(dataset.total_len()) - 1 -
                           model.horizon.max_lead();
    if (last < first) throw std::invalid_argument("eval_fcds: backtest shorter than horizon");
    std::vector<long long> fcds;
    if (eval_fcd_count <= 1 || last == first) {
        fcds.push_back(first);
        return fcds;
    }
    const double step = static_cast<double>(last - first) / static_cast<double>(eval_fcd_count - 1);
    for (std::size_t i = 0; i < eval_fcd_count; ++i) {
        const long long fcd = first + static_cast<long long>(std::llround(step * static_cast<double>(i)));
        if (fcds.empty() || fcds.back() != fcd) fcds.push_back(fcd);
    }
    return fcds;
}

void ExperimentConfig::validate() const {
    model.validate();
    if (dataset.categories.empty()) throw std::invalid_argument("config: dataset.categories empty");
    if (dataset.max_future_lead < model.horizon.max_lead()) {
        throw std::invalid_argument("config: max_future_lead shorter than the horizon");
    }
    if (eval_fcd_count < 1) throw std::invalid_argument("config: eval_fcd_count must be >= 1");
}

nlohmann::json dataset_config_to_json(const DatasetConfig& cfg) {
    nlohmann::json j;
    j["history_len"] = cfg.history_len;
    j["backtest_len"] = cfg.backtest_len;
    j["past_cov_dim"] = cfg.past_cov_dim;
    j["future_cov_dim"] = cfg.future_cov_dim;
    j["static_cov_dim"] = cfg.static_cov_dim;
    j["max_future_lead"] = cfg.max_future_lead;
    j["window"] = cfg.window;
    nlohmann::json cats = nlohmann::json::array();
    for (const auto& c : cfg.categories) {
        nlohmann::json jc;
        jc["category"] = category_name(c.category);
        jc["count"] = c.count;
        if (c.category == MagnitudeCategory::Zero) {
            jc["resurge_prob"] = c.resurge_prob;
            jc["burst_rate"] = c.burst_rate;
            jc["burst_len"] = c.burst_len;
        } else {
            jc["base_agg"] = c.base_agg;
        }
        cats.push_back(std::move(jc));
    }
    j["categories"] = std::move(cats);
    return j;
}

DatasetConfig dataset_config_from_json(const nlohmann::json& j) {
    DatasetConfig cfg;
    cfg.history_len = j.value("history_len", cfg.history_len);
    cfg.backtest_len = j.value("backtest_len", cfg.backtest_len);
    cfg.past_cov_dim = j.value("past_cov_dim", cfg.past_cov_dim);
    cfg.future_cov_dim = j.value("future_cov_dim", cfg.future_cov_dim);
    cfg.static_cov_dim = j.value("static_cov_dim", cfg.static_cov_dim);
    cfg.max_future_lead = j.value("max_future_lead", cfg.max_future_lead);
    cfg.window = j.value("window", cfg.window);
    cfg.categories.clear();
    for (const auto& jc : j.at("categories")) {
        CategoryBlock c;
        c.category = category_from_name(jc.at("category").get<std::string>());
        c.count = jc.at("count").get<std::size_t>();
        c.base_agg = jc.value("base_agg", 0.0);
        c.resurge_prob = jc.value("resurge_prob", c.resurge_prob);
        c.burst_rate = jc.value("burst_rate", c.burst_rate);
        c.burst_len = jc.value("burst_len", c.burst_len);
        cfg.categories.push_back(c);
    }
    return cfg;
}

nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["dataset"] = dataset_config_to_json(cfg.dataset);
    j["model"] = model_config_to_json(cfg.model);
    j["eval_fcd_count"] = cfg.eval_fcd_count;
    return j;
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    cfg.dataset = dataset_config_from_json(j.at("dataset"));
    cfg.model = model_config_from_json(j.at("model"));
    // A {max_lead, spans} horizon block is the compact way to specify the
    // grid; an explicit pair list inside "model" wins when present.
    if (j.contains("horizon")) {
        const auto& h = j.at("horizon");
        cfg.model.horizon = build_horizon_grid(h.at("max_lead").get<int>(),
                                               h.at("spans").get<std::vector<int>>());
    }
    if (cfg.model.train.train_period_end == 0) {
        cfg.model.train.train_period_end = cfg.dataset.history_len;
    }
    cfg.model.past_cov_dim = cfg.dataset.past_cov_dim;
    cfg.model.future_cov_dim = cfg.dataset.future_cov_dim;
    cfg.model.static_cov_dim = cfg.dataset.static_cov_dim;
    cfg.eval_fcd_count = j.value("eval_fcd_count", cfg.eval_fcd_count);
    cfg.validate();
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    nlohmann::json j;
    in >> j;
    return experiment_config_from_json(j);
}

ModelConfig apply_variant(ModelConfig base, const std::string& variant_id) {
    ModelConfig cfg = std::move(base);
    cfg.zero_override = false;
    if (variant_id == "v9") {
        cfg.encoder.heads = 1;
        cfg.encoder.gating = GatingMode::UniformConcatLinear;
        cfg.sparse_arm_enabled = false;
    } else if (variant_id == "v11") {
        cfg.encoder.heads = 1;
        cfg.encoder.gating = GatingMode::UniformConcatLinear;
        cfg.sparse_arm_enabled = false;
        cfg.zero_override = true;
    } else if (variant_id == "v13") {
        cfg.encoder.gating = GatingMode::MomentGated;
        cfg.sparse_arm_enabled = false;
    } else if (variant_id == "v15" || variant_id == "v16") {
        cfg.sparse_arm_enabled = true;
        cfg.sparse.family = SparseFamily::TruncatedNormal;
        if (variant_id == "v15") cfg.encoder.heads = 1;
        else cfg.encoder.gating = GatingMode::MomentGated;
    } else if (variant_id == "v17" || variant_id == "v18") {
        cfg.sparse_arm_enabled = true;
        cfg.sparse.family = SparseFamily::Exponential;
        if (variant_id == "v17") cfg.encoder.heads = 1;
        else cfg.encoder.gating = GatingMode::MomentGated;
    } else if (variant_id == "v19") {
        cfg.sparse_arm_enabled = true;
        cfg.sparse.family = SparseFamily::Exponential;
        cfg.encoder.gating = GatingMode::UniformConcatLinear;
    } else {
        throw std::invalid_argument("unknown ablation variant: " + variant_id);
    }
    return cfg;
}

std::vector<BiasReport> train_and_report(const ExperimentConfig& cfg, const ModelConfig& model_cfg,
                                         std::uint64_t seed,
                                         const std::vector<BiasReport>* baseline) {
    ModelConfig mc = model_cfg;
    mc.train.seed = seed;
    mc.train.train_period_end = cfg.dataset.history_len;
    const auto dataset = gen_mixed_magnitude_dataset(cfg.dataset, seed);
    SpadeSModel model(std::move(mc));
    model.train(dataset);
    const QuantileForecast fc = model.evaluate(dataset, cfg.eval_fcds());
    return report_by_category(fc, baseline);
}

AblationResult run_ablation(const std::vector<std::string>& variants, const ExperimentConfig& cfg,
                            const std::vector<std::uint64_t>& seeds) {
    if (variants.empty()) throw std::invalid_argument("run_ablation: no variants");
    if (seeds.empty()) throw std::invalid_argument("run_ablation: no seeds");
    for (const auto& v : variants) apply_variant(cfg.model, v); // id check up front

    AblationResult result;
    for (std::uint64_t seed : seeds) {
        std::vector<BiasReport> base_report;
        for (std::size_t vi = 0; vi < variants.size(); ++vi) {
            const ModelConfig vc = apply_variant(cfg.model, variants[vi]);
            const std::vector<BiasReport>* base = vi == 0 ? nullptr : &base_report;
            AblationRun run;
            run.seed = seed;
            run.variant = variants[vi];
            run.report = train_and_report(cfg, vc, seed, base);
            if (vi == 0) base_report = run.report;
            result.runs.push_back(std::move(run));
        }
    }

    // Medians across seeds per (variant, category, quantile).
    for (const auto& variant : variants) {
        std::vector<const AblationRun*> runs;
        for (const auto& r : result.runs) {
            if (r.variant == variant) runs.push_back(&r);
        }
        if (runs.empty()) continue;
        for (const auto& row0 : runs.front()->report) {
            std::vector<double> wqls, deltas;
            for (const AblationRun* r : runs) {
                for (const auto& row : r->report) {
                    if (row.category == row0.category && row.quantile == row0.quantile) {
                        if (row.wql) wqls.push_back(*row.wql);
                        if (row.delta_vs_baseline_pct) deltas.push_back(*row.delta_vs_baseline_pct);
                    }
                }
            }
            AblationResult::SummaryRow s;
            s.variant = variant;
            s.category = row0.category;
            s.quantile = row0.quantile;
            s.median_wql = wqls.empty() ? 0.0 : median(wqls);
            if (!deltas.empty()) s.median_delta_pct = median(deltas);
            result.summary.push_back(std::move(s));
        }
    }
    return result;
}

std::string ablation_runs_csv(const AblationResult& result) {
    std::ostringstream out;
    out << "seed,variant,category,quantile,ql,ob,ub,wql,delta_vs_baseline_pct\n";
    for (const auto& run : result.runs) {
        for (const auto& r : run.report) {
            out << run.seed << ',' << run.variant << ',' << r.category << ','
                << format_double(r.quantile) << ',' << format_double(r.ql) << ','
                << format_double(r.ob) << ',' << format_double(r.ub) << ','
                << format_optional(r.wql) << ',' << format_optional(r.delta_vs_baseline_pct)
                << "\n";
        }
    }
    return out.str();
}

std::string ablation_summary_csv(const AblationResult& result) {
    std::ostringstream out;
    out << "variant,category,quantile,median_wql,median_delta_vs_baseline_pct\n";
    for (const auto& s : result.summary) {
        out << s.variant << ',' << s.category << ',' << format_double(s.quantile) << ','
            << format_double(s.median_wql) << ',' << format_optional(s.median_delta_pct) << "\n";
    }
    return out.str();
}

std::string ablation_summary_json(const AblationResult& result) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : result.summary) {
        arr.push_back({{"variant", s.variant},
                       {"category", s.category},
                       {"quantile", s.quantile},
                       {"median_wql", s.median_wql},
                       {"median_delta_vs_baseline_pct",
                        s.median_delta_pct ? nlohmann::json(*s.median_delta_pct) : nlohmann::json()}});
    }
    return arr.dump(2) + "\n";
}

std::vector<BiasSamplingRow> run_bias_sampling_experiment(const ExperimentConfig& cfg,
                                                          double cutoff_a, double cutoff_b,
                                                          const std::vector<std::uint64_t>& seeds) {
    if (seeds.empty()) throw std::invalid_argument("bias sampling: no seeds");
    std::vector<BiasSamplingRow> rows;
    for (std::uint64_t seed : seeds) {
        ModelConfig mc_a = cfg.model;
        mc_a.train.sampling_cutoff = cutoff_a;
        ModelConfig mc_b = cfg.model;
        mc_b.train.sampling_cutoff = cutoff_b;
        const auto report_a = train_and_report(cfg, mc_a, seed);
        const auto report_b = train_and_report(cfg, mc_b, seed);
        for (const auto& ra : report_a) {
            for (const auto& rb : report_b) {
                if (ra.category != rb.category || ra.quantile != rb.quantile) continue;
                for (const char* metric : {"ob", "ub"}) {
                    BiasSamplingRow row;
                    row.seed = seed;
                    row.category = ra.category;
                    row.quantile = ra.quantile;
                    row.metric = metric;
                    row.baseline = std::string(metric) == "ob" ? ra.ob : ra.ub;
                    row.experiment = std::string(metric) == "ob" ? rb.ob : rb.ub;
                    if (row.baseline > 0.0) {
                        row.delta_pct = (row.experiment / row.baseline - 1.0) * 100.0;
                    }
                    rows.push_back(std::move(row));
                }
            }
        }
    }
    return rows;
}

std::string bias_sampling_csv(const std::vector<BiasSamplingRow>& rows) {
    std::ostringstream out;
    out << "seed,category,quantile,metric,baseline,experiment,delta_pct\n";
    for (const auto& r : rows) {
        out << r.seed << ',' << r.category << ',' << format_double(r.quantile) << ',' << r.metric
            << ',' << format_double(r.baseline) << ',' << format_double(r.experiment) << ','
            << format_optional(r.delta_pct) << "\n";
    }
    return out.str();
}

std::vector<HeadSweepRow> head_count_sweep(const std::vector<int>& g_values,
                                           const ExperimentConfig& cfg,
                                           const std::vector<std::uint64_t>& seeds) {
    if (g_values.empty()) throw std::invalid_argument("head sweep: no head counts");
    if (seeds.empty()) throw std::invalid_argument("head sweep: no seeds");
    std::vector<HeadSweepRow> rows;
    for (std::uint64_t seed : seeds) {
        for (int g : g_values) {
            if (g < 1) throw std::invalid_argument("head sweep: head count must be >= 1");
            ModelConfig mc = apply_variant(cfg.model, "v19");
            mc.encoder.heads = g;
            const auto report = train_and_report(cfg, mc, seed);
            for (const auto& r : report) {
                HeadSweepRow row;
                row.seed = seed;
                row.heads = g;
                row.category = r.category;
                row.quantile = r.quantile;
                row.wql = r.wql;
                rows.push_back(std::move(row));
            }
        }
    }
    return rows;
}

std::string head_sweep_csv(const std::vector<HeadSweepRow>& rows) {
    std::ostringstream out;
    out << "seed,heads,category,quantile,wql\n";
    for (const auto& r : rows) {
        out << r.seed << ',' << r.heads << ',' << r.category << ',' << format_double(r.quantile)
            << ',' << format_optional(r.wql) << "\n";
    }
    return out.str();
}

} // namespace spades
