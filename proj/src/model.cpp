#include "spades/model.hpp"

#include "spades/csv.hpp"
#include "spades/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace spades {

namespace {

// Batch points are processed in fixed chunks; gradients accumulate into
// per-chunk stores that are reduced in chunk order, so training is
// deterministic for any thread count.
constexpr std::size_t kTrainChunk = 8;

} // namespace

void ModelConfig::validate() const {
    encoder.validate();
    horizon.validate();
    if (quantiles.empty()) throw std::invalid_argument("config: quantile set empty");
    if (!std::is_sorted(quantiles.begin(), quantiles.end())) {
        throw std::invalid_argument("config: quantiles must be sorted");
    }
    for (double q : quantiles) {
        if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("config: quantile outside (0,1)");
    }
    if (routing_window < 1) throw std::invalid_argument("config: routing_window must be >= 1");
    if (context_len < 1) throw std::invalid_argument("config: context_len must be >= 1");
    if (sparse_arm_enabled && zero_override) {
        throw std::invalid_argument("config: zero_override replaces the sparse arm");
    }
    if (train.batch_size < 1 || train.steps_per_epoch < 1) {
        throw std::invalid_argument("config: batch_size and steps_per_epoch must be >= 1");
    }
    if (train.lr < 0.0) throw std::invalid_argument("config: lr must be >= 0");
    if (!(train.sampling_cutoff > 0.0 && train.sampling_cutoff < 1.0)) {
        throw std::invalid_argument("config: sampling_cutoff must lie in (0,1)");
    }
}

nlohmann::json model_config_to_json(const ModelConfig& cfg) {
    nlohmann::json j;
    j["encoder"] = {{"heads", cfg.encoder.heads},
                    {"hidden_channels", cfg.encoder.hidden_channels},
                    {"kernel_width", cfg.encoder.kernel_width},
                    {"dilations", cfg.encoder.dilations},
                    {"combine_width", cfg.encoder.combine_width},
                    {"gating", cfg.encoder.gating == GatingMode::MomentGated ? "moment" : "uniform"},
                    {"gate_hidden", cfg.encoder.gate_hidden}};
    j["decoder_hidden"] = cfg.decoder_hidden;
    j["sparse"] = {{"family", family_name(cfg.sparse.family)},
                   {"patch_len", cfg.sparse.patch_len},
                   {"embed_dim", cfg.sparse.embed_dim},
                   {"hidden", cfg.sparse.hidden}};
    j["sparse_arm_enabled"] = cfg.sparse_arm_enabled;
    j["zero_override"] = cfg.zero_override;
    j["quantiles"] = cfg.quantiles;
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& p : cfg.horizon.pairs) pairs.push_back({p.lead_time, p.span});
    j["horizon"] = {{"pairs", pairs}, {"max_span", cfg.horizon.max_span}};
    j["routing_window"] = cfg.routing_window;
    j["context_len"] = cfg.context_len;
    j["peak"] = {{"identity", cfg.peak.identity},
                 {"cap_multiplier", cfg.peak.cap_multiplier},
                 {"mean_window", cfg.peak.mean_window}};
    j["past_cov_dim"] = cfg.past_cov_dim;
    j["future_cov_dim"] = cfg.future_cov_dim;
    j["static_cov_dim"] = cfg.static_cov_dim;
    j["train"] = {{"lr", cfg.train.lr},
                  {"batch_size", cfg.train.batch_size},
                  {"epochs", cfg.train.epochs},
                  {"steps_per_epoch", cfg.train.steps_per_epoch},
                  {"seed", cfg.train.seed},
                  {"sampling_cutoff", cfg.train.sampling_cutoff},
                  {"min_history", cfg.train.min_history},
                  {"train_period_end", cfg.train.train_period_end}};
    return j;
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
    ModelConfig cfg;
    if (j.contains("encoder")) {
        const auto& e = j.at("encoder");
        cfg.encoder.heads = e.value("heads", cfg.encoder.heads);
        cfg.encoder.hidden_channels = e.value("hidden_channels", cfg.encoder.hidden_channels);
        cfg.encoder.kernel_width = e.value("kernel_width", cfg.encoder.kernel_width);
        if (e.contains("dilations")) cfg.encoder.dilations = e.at("dilations").get<std::vector<int>>();
        cfg.encoder.combine_width = e.value("combine_width", cfg.encoder.combine_width);
        const std::string gating = e.value("gating", std::string("uniform"));
        if (gating == "moment") cfg.encoder.gating = GatingMode::MomentGated;
        else if (gating == "uniform") cfg.encoder.gating = GatingMode::UniformConcatLinear;
        else throw std::invalid_argument("config: unknown gating mode " + gating);
        cfg.encoder.gate_hidden = e.value("gate_hidden", cfg.encoder.gate_hidden);
    }
    if (j.contains("decoder_hidden")) cfg.decoder_hidden = j.at("decoder_hidden").get<std::vector<int>>();
    if (j.contains("sparse")) {
        const auto& s = j.at("sparse");
        cfg.sparse.family = family_from_name(s.value("family", std::string("exponential")));
        cfg.sparse.patch_len = s.value("patch_len", cfg.sparse.patch_len);
        cfg.sparse.embed_dim = s.value("embed_dim", cfg.sparse.embed_dim);
        if (s.contains("hidden")) cfg.sparse.hidden = s.at("hidden").get<std::vector<int>>();
    }
    cfg.sparse_arm_enabled = j.value("sparse_arm_enabled", cfg.sparse_arm_enabled);
    cfg.zero_override = j.value("zero_override", cfg.zero_override);
    if (j.contains("quantiles")) cfg.quantiles = j.at("quantiles").get<std::vector<double>>();
    if (j.contains("horizon")) {
        const auto& h = j.at("horizon");
        cfg.horizon.pairs.clear();
        for (const auto& p : h.at("pairs")) {
            cfg.horizon.pairs.push_back({p.at(0).get<int>(), p.at(1).get<int>()});
        }
        cfg.horizon.max_span = h.value("max_span", 0);
        if (cfg.horizon.max_span == 0) {
            for (const auto& p : cfg.horizon.pairs) {
                cfg.horizon.max_span = std::max(cfg.horizon.max_span, p.span);
            }
        }
    }
    cfg.routing_window = j.value("routing_window", cfg.routing_window);
    cfg.context_len = j.value("context_len", cfg.context_len);
    if (j.contains("peak")) {
        const auto& p = j.at("peak");
        cfg.peak.identity = p.value("identity", cfg.peak.identity);
        cfg.peak.cap_multiplier = p.value("cap_multiplier", cfg.peak.cap_multiplier);
        cfg.peak.mean_window = p.value("mean_window", cfg.peak.mean_window);
    }
    cfg.past_cov_dim = j.value("past_cov_dim", cfg.past_cov_dim);
    cfg.future_cov_dim = j.value("future_cov_dim", cfg.future_cov_dim);
    cfg.static_cov_dim = j.value("static_cov_dim", cfg.static_cov_dim);
    if (j.contains("train")) {
        const auto& t = j.at("train");
        cfg.train.lr = t.value("lr", cfg.train.lr);
        cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
        cfg.train.epochs = t.value("epochs", cfg.train.epochs);
        cfg.train.steps_per_epoch = t.value("steps_per_epoch", cfg.train.steps_per_epoch);
        if (!t.contains("seed")) throw std::invalid_argument("config: train.seed is mandatory");
        cfg.train.seed = t.at("seed").get<std::uint64_t>();
        cfg.train.sampling_cutoff = t.value("sampling_cutoff", cfg.train.sampling_cutoff);
        cfg.train.min_history = t.value("min_history", cfg.train.min_history);
        cfg.train.train_period_end = t.value("train_period_end", cfg.train.train_period_end);
    }
    return cfg;
}

SpadeSModel::SpadeSModel(ModelConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    arms_ = build_arms(params_, ParamInit::Create);
    Rng rng = Rng(cfg_.train.seed).fork(0xA11C0DE);
    for (const auto& [name, tensor] : params_.entries()) {
        ParamStore::init_xavier(tensor, rng);
        tensor->ensure_grad();
    }
}

SpadeSModel::Arms SpadeSModel::build_arms(ParamStore& store, ParamInit mode) const {
    Arms arms;
    const std::size_t in_channels = 1 + cfg_.past_cov_dim;
    arms.encoder.emplace(cfg_.encoder, in_channels, store, "encoder", mode);
    if (cfg_.encoder.gating == GatingMode::MomentGated) {
        arms.gate.emplace(cfg_.encoder, store, "gate", mode);
    }
    std::size_t cur = static_cast<std::size_t>(cfg_.encoder.combine_width) + cfg_.future_cov_dim +
                      cfg_.static_cov_dim + 2;
    for (std::size_t l = 0; l < cfg_.decoder_hidden.size(); ++l) {
        const auto next = static_cast<std::size_t>(cfg_.decoder_hidden[l]);
        arms.dec_w.push_back(store.acquire(mode, "decoder.l" + std::to_string(l) + ".w", {cur, next}));
        arms.dec_b.push_back(store.acquire(mode, "decoder.l" + std::to_string(l) + ".b", {next}));
        cur = next;
    }
    arms.dec_w.push_back(store.acquire(mode, "decoder.out.w", {cur, cfg_.quantiles.size()}));
    arms.dec_b.push_back(store.acquire(mode, "decoder.out.b", {cfg_.quantiles.size()}));
    if (cfg_.sparse_arm_enabled) {
        arms.sparse.emplace(cfg_.sparse, in_channels, store, "sparse", mode);
    }
    return arms;
}

Routing SpadeSModel::route(const std::vector<TimeSeriesRecord>& batch, long long fcd) const {
    Routing r;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        if (is_sparse(batch[i], fcd, cfg_.routing_window)) r.sparse.push_back(i);
        else r.dense.push_back(i);
    }
    return r;
}

std::vector<std::vector<double>> SpadeSModel::history_window(const TimeSeriesRecord& rec,
                                                             long long fcd, bool filtered) const {
    if (fcd < 0 || fcd >= static_cast<long long>(rec.length())) {
        throw std::invalid_argument("history_window: fcd out of range");
    }
    std::vector<double> target(rec.target.begin(), rec.target.begin() + fcd + 1);
    if (filtered) target = peak_filter(target, cfg_.peak);
    const std::size_t ctx = std::min<std::size_t>(static_cast<std::size_t>(cfg_.context_len),
                                                  static_cast<std::size_t>(fcd) + 1);
    const std::size_t start = static_cast<std::size_t>(fcd) + 1 - ctx;
    std::vector<std::vector<double>> rows(ctx, std::vector<double>(1 + cfg_.past_cov_dim, 0.0));
    for (std::size_t i = 0; i < ctx; ++i) {
        const std::size_t t = start + i;
        // log1p keeps the demand channel on a scale the tanh stacks can
        // resolve across magnitude categories.
        rows[i][0] = std::log1p(target[t]);
        if (rec.past_cov[t].size() != cfg_.past_cov_dim) {
            throw std::invalid_argument("record " + rec.id + ": past covariate arity mismatch");
        }
        for (std::size_t k = 0; k < cfg_.past_cov_dim; ++k) rows[i][1 + k] = rec.past_cov[t][k];
    }
    return rows;
}

Var SpadeSModel::decode_matrix(Tape& tape, const Arms& arms, const TimeSeriesRecord& rec,
                               long long fcd) const {
    const auto rows = history_window(rec, fcd, /*filtered=*/true);
    const std::size_t ctx = rows.size();
    Tensor x({ctx, 1 + cfg_.past_cov_dim});
    for (std::size_t t = 0; t < ctx; ++t) {
        for (std::size_t k = 0; k < x.dim(1); ++k) x(t, k) = rows[t][k];
    }
    Var input = make_var(std::move(x));

    Var gate;
    if (arms.gate) {
        const std::size_t start = static_cast<std::size_t>(fcd) + 1 - ctx;
        std::vector<double> hist(rec.target.begin() + static_cast<std::ptrdiff_t>(start),
                                 rec.target.begin() + fcd + 1);
        gate = arms.gate->forward(tape, hist);
    }
    const Encoding enc = arms.encoder->forward(tape, input, arms.gate ? &gate : nullptr);
    Var enc_fcd = row_of(tape, enc.values, ctx - 1);

    if (rec.static_cov.size() != cfg_.static_cov_dim) {
        throw std::invalid_argument("record " + rec.id + ": static covariate arity mismatch");
    }
    const int max_lead = cfg_.horizon.max_lead();
    if (static_cast<std::size_t>(fcd) >= rec.future_cov.size()) {
        throw std::invalid_argument("record " + rec.id + ": missing future covariates at fcd");
    }
    const auto& fcov = rec.future_cov[static_cast<std::size_t>(fcd)];
    if (fcov.size() != cfg_.future_cov_dim) {
        throw std::invalid_argument("record " + rec.id + ": future covariate arity mismatch");
    }

    // The decoder predicts per-period rates on a per-series scale; the
    // positive multiplier keeps the monotone head's guarantees intact.
    const double level =
        1.0 + trailing_aggregate(rec, fcd, cfg_.routing_window) /
                  static_cast<double>(cfg_.routing_window);

    std::vector<Var> out_rows;
    out_rows.reserve(cfg_.horizon.pairs.size());
    for (const auto& h : cfg_.horizon.pairs) {
        std::vector<double> feats;
        feats.reserve(cfg_.future_cov_dim + cfg_.static_cov_dim + 2);
        for (std::size_t f = 0; f < cfg_.future_cov_dim; ++f) {
            if (fcov[f].size() < static_cast<std::size_t>(h.lead_time + h.span - 1)) {
                throw std::invalid_argument("record " + rec.id + ": missing future covariates");
            }
            double pooled = 0.0;
            for (int u = h.lead_time; u <= h.lead_time + h.span - 1; ++u) {
                pooled += fcov[f][static_cast<std::size_t>(u - 1)];
            }
            feats.push_back(pooled / static_cast<double>(h.span));
        }
        feats.insert(feats.end(), rec.static_cov.begin(), rec.static_cov.end());
        feats.push_back(static_cast<double>(h.lead_time) / static_cast<double>(max_lead));
        feats.push_back(static_cast<double>(h.span) / static_cast<double>(cfg_.horizon.max_span));

        Var feat_leaf = make_var(Tensor::from({feats.size()}, feats));
        Var v = concat_vec(tape, {enc_fcd, feat_leaf});
        const std::size_t hidden_layers = arms.dec_w.size() - 1;
        for (std::size_t l = 0; l < hidden_layers; ++l) {
            v = tanh_op(tape, linear(tape, v, arms.dec_w[l], arms.dec_b[l]));
        }
        Var raw = linear(tape, v, arms.dec_w.back(), arms.dec_b.back());
        Var monotone = monotone_quantile_head(tape, raw);
        out_rows.push_back(scale_const(tape, monotone, level * static_cast<double>(h.span)));
    }
    return stack_rows(tape, out_rows);
}

Var SpadeSModel::point_preds(Tape& tape, const Arms& arms, const TimeSeriesRecord& rec,
                             long long fcd, bool sparse_route) const {
    if (sparse_route && cfg_.zero_override) {
        return make_var(Tensor({cfg_.horizon.pairs.size(), cfg_.quantiles.size()}));
    }
    if (sparse_route && cfg_.sparse_arm_enabled) {
        const auto rows = history_window(rec, fcd, /*filtered=*/false);
        Var raw = arms.sparse->raw_params(tape, rows);
        return sparse_quantile_matrix(tape, raw, cfg_.sparse.family, cfg_.horizon, cfg_.quantiles);
    }
    return decode_matrix(tape, arms, rec, fcd);
}

double SpadeSModel::span_target(const TimeSeriesRecord& rec, long long fcd, const HorizonPair& h) {
    const long long last = fcd + h.lead_time + h.span - 1;
    if (last >= static_cast<long long>(rec.length())) {
        throw std::invalid_argument("span_target: horizon exceeds series length");
    }
    double sum = 0.0;
    for (long long t = fcd + h.lead_time; t <= last; ++t) {
        sum += rec.target[static_cast<std::size_t>(t)];
    }
    return sum;
}

Var SpadeSModel::point_objective(Tape& tape, const Arms& arms, const TimeSeriesRecord& rec,
                                 long long fcd, double scale) const {
    const bool sparse_route =
        cfg_.routing_active() && is_sparse(rec, fcd, cfg_.routing_window);
    Var preds = point_preds(tape, arms, rec, fcd, sparse_route);
    std::vector<double> actuals, spans;
    actuals.reserve(cfg_.horizon.pairs.size());
    spans.reserve(cfg_.horizon.pairs.size());
    for (const auto& h : cfg_.horizon.pairs) {
        actuals.push_back(span_target(rec, fcd, h));
        spans.push_back(static_cast<double>(h.span));
    }
    // Mean over (h, q) keeps the loss scale independent of the grid size.
    const double norm = scale / static_cast<double>(cfg_.horizon.pairs.size() *
                                                    cfg_.quantiles.size());
    return pinball_loss_matrix(tape, preds, actuals, spans, cfg_.quantiles, norm);
}

double SpadeSModel::grad_check_point(const TimeSeriesRecord& rec, long long fcd, double epsilon) {
    auto build = [&](Tape& tape) {
        return point_objective(tape, arms_, rec, fcd, 1.0);
    };
    return grad_check(build, params_.tensors(), epsilon);
}

std::vector<std::vector<double>> SpadeSModel::forward_point(const TimeSeriesRecord& rec,
                                                            long long fcd) const {
    Tape tape;
    const bool sparse_route =
        cfg_.routing_active() && is_sparse(rec, fcd, cfg_.routing_window);
    Var preds = point_preds(tape, arms_, rec, fcd, sparse_route);
    const std::size_t H = cfg_.horizon.pairs.size();
    const std::size_t Q = cfg_.quantiles.size();
    std::vector<std::vector<double>> out(H, std::vector<double>(Q, 0.0));
    for (std::size_t h = 0; h < H; ++h) {
        for (std::size_t q = 0; q < Q; ++q) out[h][q] = preds->v[h * Q + q];
    }
    return out;
}

void SpadeSModel::train(const std::vector<TimeSeriesRecord>& dataset) {
    if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
    const std::size_t len = dataset.front().length();
    for (const auto& rec : dataset) {
        if (rec.length() != len) throw std::invalid_argument("train: ragged series lengths");
    }
    const std::size_t train_end =
        cfg_.train.train_period_end == 0 ? len : std::min(cfg_.train.train_period_end, len);
    const long long fcd_min = static_cast<long long>(cfg_.train.min_history);
    const long long fcd_max =
        static_cast<long long>(train_end) - 1 - cfg_.horizon.max_lead();
    if (fcd_max < fcd_min) throw std::invalid_argument("train: no valid forecast creation dates");

    // Per-fcd importance tables (cumulative weights for binary search).
    const std::size_t n_fcds = static_cast<std::size_t>(fcd_max - fcd_min + 1);
    std::vector<std::vector<double>> cumweights(n_fcds);
    for (std::size_t fi = 0; fi < n_fcds; ++fi) {
        const long long fcd = fcd_min + static_cast<long long>(fi);
        std::vector<double> mags(dataset.size());
        for (std::size_t i = 0; i < dataset.size(); ++i) {
            mags[i] = trailing_aggregate(dataset[i], fcd, cfg_.routing_window);
        }
        const SamplingWeights w = importance_weights(mags, cfg_.train.sampling_cutoff);
        cumweights[fi].resize(w.weights.size());
        double acc = 0.0;
        for (std::size_t i = 0; i < w.weights.size(); ++i) {
            acc += w.weights[i];
            cumweights[fi][i] = acc;
        }
    }

    Rng rng = Rng(cfg_.train.seed).fork(0x7EA1);
    Adam adam(params_.tensors(), AdamConfig{cfg_.train.lr, 0.9, 0.999, 1e-8});
    loss_trace_.clear();

    const std::size_t batch = cfg_.train.batch_size;
    for (std::size_t epoch = 0; epoch < cfg_.train.epochs; ++epoch) {
        double epoch_loss = 0.0;
        for (std::size_t step = 0; step < cfg_.train.steps_per_epoch; ++step) {
            // Draw the whole batch up front so sampling is independent of
            // the parallel execution below.
            std::vector<std::pair<std::size_t, long long>> points(batch);
            for (auto& pt : points) {
                const std::size_t fi = rng.uniform_index(n_fcds);
                const auto& cw = cumweights[fi];
                const double u = rng.uniform() * cw.back();
                const std::size_t si = static_cast<std::size_t>(
                    std::lower_bound(cw.begin(), cw.end(), u) - cw.begin());
                pt = {std::min(si, dataset.size() - 1), fcd_min + static_cast<long long>(fi)};
            }

            const std::size_t n_chunks = (batch + kTrainChunk - 1) / kTrainChunk;
            std::vector<ParamStore> chunk_stores;
            chunk_stores.reserve(n_chunks);
            for (std::size_t c = 0; c < n_chunks; ++c) chunk_stores.push_back(params_.clone());
            std::vector<double> chunk_loss(n_chunks, 0.0);
            std::exception_ptr error;

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
            for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(n_chunks); ++c) {
                try {
                    const auto ci = static_cast<std::size_t>(c);
                    Arms arms = build_arms(chunk_stores[ci], ParamInit::Bind);
                    const std::size_t lo = ci * kTrainChunk;
                    const std::size_t hi = std::min(lo + kTrainChunk, batch);
                    for (std::size_t p = lo; p < hi; ++p) {
                        Tape tape;
                        Var loss = point_objective(tape, arms, dataset[points[p].first],
                                                   points[p].second,
                                                   1.0 / static_cast<double>(batch));
                        tape.backward(loss);
                        chunk_loss[ci] += loss->v[0];
                    }
                } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
                    if (!error) error = std::current_exception();
                }
            }
            if (error) std::rethrow_exception(error);

            adam.zero_grad();
            double step_loss = 0.0;
            for (std::size_t c = 0; c < n_chunks; ++c) {
                params_.add_grads_from(chunk_stores[c]);
                step_loss += chunk_loss[c];
            }
            if (!std::isfinite(step_loss)) {
                throw training_divergence_error("training diverged (non-finite loss) at epoch " +
                                                std::to_string(epoch) + " step " +
                                                std::to_string(step));
            }
            try {
                adam.step();
            } catch (const training_divergence_error& e) {
                throw training_divergence_error(std::string(e.what()) + " (epoch " +
                                                std::to_string(epoch) + " step " +
                                                std::to_string(step) + ")");
            }
            epoch_loss += step_loss;
        }
        loss_trace_.push_back(epoch_loss / static_cast<double>(cfg_.train.steps_per_epoch));
    }
}

QuantileForecast SpadeSModel::evaluate(const std::vector<TimeSeriesRecord>& dataset,
                                       const std::vector<long long>& fcds) const {
    if (fcds.empty()) throw std::invalid_argument("evaluate: no forecast creation dates");
    QuantileForecast fc;
    fc.quantiles = cfg_.quantiles;

    struct Task {
        std::size_t series;
        long long fcd;
    };
    std::vector<Task> tasks;
    tasks.reserve(dataset.size() * fcds.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        for (long long fcd : fcds) tasks.push_back({i, fcd});
    }
    std::vector<std::vector<std::vector<double>>> results(tasks.size());
    std::exception_ptr error;

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(tasks.size()); ++t) {
        try {
            const auto& task = tasks[static_cast<std::size_t>(t)];
            results[static_cast<std::size_t>(t)] = forward_point(dataset[task.series], task.fcd);
        } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);

    for (std::size_t t = 0; t < tasks.size(); ++t) {
        const auto& rec = dataset[tasks[t].series];
        const long long fcd = tasks[t].fcd;
        const MagnitudeCategory cat =
            categorize_magnitude(trailing_aggregate(rec, fcd, cfg_.routing_window));
        for (std::size_t h = 0; h < cfg_.horizon.pairs.size(); ++h) {
            EvalPoint pt;
            pt.series = tasks[t].series;
            pt.fcd = fcd;
            pt.horizon = cfg_.horizon.pairs[h];
            pt.category = cat;
            pt.actual = span_target(rec, fcd, cfg_.horizon.pairs[h]);
            pt.forecast = results[t][h];
            fc.points.push_back(std::move(pt));
        }
    }
    fc.validate();
    return fc;
}

void SpadeSModel::save_checkpoint(const std::string& path) const {
    nlohmann::json j;
    j["format_version"] = 1;
    j["kind"] = "spades-checkpoint";
    j["config"] = model_config_to_json(cfg_);
    nlohmann::json tensors;
    for (const auto& [name, t] : params_.entries()) {
        tensors[name] = {{"shape", t->shape()}, {"values", t->v}};
    }
    j["tensors"] = std::move(tensors);
    j["loss_trace"] = loss_trace_;
    write_text_file(path, j.dump());
}

SpadeSModel SpadeSModel::load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    nlohmann::json j;
    in >> j;
    if (j.value("format_version", 0) != 1 || j.value("kind", std::string()) != "spades-checkpoint") {
        throw std::runtime_error("unrecognized checkpoint format: " + path);
    }
    SpadeSModel model(model_config_from_json(j.at("config")));
    for (const auto& [name, t] : model.params_.entries()) {
        const auto& entry = j.at("tensors").at(name);
        const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
        if (shape != t->shape()) throw std::runtime_error("checkpoint shape mismatch: " + name);
        t->v = entry.at("values").get<std::vector<double>>();
        t->ensure_grad();
    }
    if (j.contains("loss_trace")) {
        model.loss_trace_ = j.at("loss_trace").get<std::vector<double>>();
    }
    return model;
}

} // namespace spades
