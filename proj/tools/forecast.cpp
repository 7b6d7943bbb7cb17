// Command-line front end: data generation, training, evaluation and the
// simulation/ablation experiment runners. All stochastic commands take an
// explicit seed and write byte-stable CSV/JSON outputs.

#include "spades/csv.hpp"
#include "spades/experiments.hpp"
#include "spades/model.hpp"
#include "spades/series.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace spades;

std::vector<double> parse_double_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(item));
    if (out.empty()) throw std::invalid_argument("empty list: " + csv);
    return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(static_cast<std::uint64_t>(parse_int(item)));
    if (out.empty()) throw std::invalid_argument("empty seed list");
    return out;
}

std::vector<std::string> parse_string_list(const std::string& csv) {
    std::vector<std::string> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(item);
    if (out.empty()) throw std::invalid_argument("empty list");
    return out;
}

std::vector<int> parse_int_list(const std::string& csv) {
    std::vector<int> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(static_cast<int>(parse_int(item)));
    if (out.empty()) throw std::invalid_argument("empty list");
    return out;
}

void ensure_dir(const std::string& dir) {
    std::filesystem::create_directories(dir);
}

int cmd_gen_data(const std::string& config_path, std::uint64_t seed, const std::string& out_dir) {
    const ExperimentConfig cfg = load_experiment_config(config_path);
    const auto dataset = gen_mixed_magnitude_dataset(cfg.dataset, seed);
    ensure_dir(out_dir);
    write_dataset_csv(dataset, out_dir);

    // Realized category mix at the reference fcd.
    std::map<std::string, std::size_t> counts;
    const long long ref = static_cast<long long>(cfg.dataset.history_len) - 1;
    for (const auto& rec : dataset) {
        const auto c = categorize_magnitude(trailing_aggregate(rec, ref, cfg.dataset.window));
        ++counts[category_name(c)];
    }
    nlohmann::json j;
    j["series"] = dataset.size();
    j["periods"] = cfg.dataset.total_len();
    j["seed"] = seed;
    j["realized_categories"] = counts;
    write_text_file(out_dir + "/gen_summary.json", j.dump(2) + "\n");
    std::cout << "wrote " << dataset.size() << " series to " << out_dir << "\n";
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_dir,
              const std::string& out_dir, std::optional<std::uint64_t> seed) {
    ExperimentConfig cfg = load_experiment_config(config_path);
    auto dataset = read_dataset_csv(data_dir);
    if (dataset.empty()) throw std::runtime_error("train: empty dataset");
    cfg.model.past_cov_dim = dataset.front().past_cov.empty() ? 0 : dataset.front().past_cov[0].size();
    cfg.model.future_cov_dim =
        dataset.front().future_cov.empty() ? 0 : dataset.front().future_cov[0].size();
    cfg.model.static_cov_dim = dataset.front().static_cov.size();
    if (seed) cfg.model.train.seed = *seed;

    SpadeSModel model(cfg.model);
    model.train(dataset);

    ensure_dir(out_dir);
    model.save_checkpoint(out_dir + "/checkpoint.json");
    std::ostringstream log;
    log << "epoch,loss\n";
    for (std::size_t e = 0; e < model.loss_trace().size(); ++e) {
        log << e << ',' << format_double(model.loss_trace()[e]) << "\n";
    }
    write_text_file(out_dir + "/training_log.csv", log.str());
    nlohmann::json j;
    j["epochs"] = model.loss_trace().size();
    j["final_loss"] = model.loss_trace().empty() ? nlohmann::json() : nlohmann::json(model.loss_trace().back());
    j["seed"] = cfg.model.train.seed;
    j["parameters"] = model.params().total_size();
    write_text_file(out_dir + "/train_summary.json", j.dump(2) + "\n");
    std::cout << "trained " << model.params().total_size() << " parameters, checkpoint in "
              << out_dir << "\n";
    return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data_dir,
             const std::string& baseline_path, const std::string& out_dir,
             const std::string& fcds_csv) {
    SpadeSModel model = SpadeSModel::load_checkpoint(ckpt_path);
    const auto dataset = read_dataset_csv(data_dir);
    if (dataset.empty()) throw std::runtime_error("eval: empty dataset");

    std::vector<long long> fcds;
    if (!fcds_csv.empty()) {
        for (double v : parse_double_list(fcds_csv)) fcds.push_back(static_cast<long long>(v));
    } else {
        const std::size_t train_end = model.config().train.train_period_end;
        if (train_end == 0) throw std::runtime_error("eval: pass --fcds (checkpoint has no train split)");
        const long long last = static_cast<long long>(dataset.front().length()) - 1 -
                               model.config().horizon.max_lead();
        for (long long fcd = static_cast<long long>(train_end) - 1; fcd <= last;
             fcd += std::max<long long>(1, (last - static_cast<long long>(train_end) + 2) / 3)) {
            fcds.push_back(fcd);
        }
        if (fcds.empty()) throw std::runtime_error("eval: no valid backtest fcds");
    }

    const QuantileForecast fc = model.evaluate(dataset, fcds);
    std::vector<BiasReport> baseline;
    const std::vector<BiasReport>* base_ptr = nullptr;
    if (!baseline_path.empty()) {
        baseline = report_from_csv(baseline_path);
        base_ptr = &baseline;
    }
    const auto report = report_by_category(fc, base_ptr);
    ensure_dir(out_dir);
    write_text_file(out_dir + "/report.csv", report_to_csv(report));
    write_text_file(out_dir + "/report.json", report_to_json(report));
    std::cout << "evaluated " << fc.points.size() << " points at " << fcds.size()
              << " fcds; report in " << out_dir << "\n";
    return 0;
}

int cmd_sim_collapse(const std::string& sparsity_csv, std::uint64_t seed,
                     const std::string& out_dir) {
    const auto levels = parse_double_list(sparsity_csv);
    const auto results = run_collapse_sim(levels, seed);
    ensure_dir(out_dir);
    write_text_file(out_dir + "/collapse_percentiles.csv", collapse_percentiles_csv(results));
    write_text_file(out_dir + "/collapse_history.csv", collapse_history_csv(results));
    write_text_file(out_dir + "/collapse_summary.json", collapse_summary_json(results));
    for (const auto& r : results) {
        std::cout << "s=" << r.sparsity << " median 80% interval width " << r.median_width()
                  << "\n";
    }
    return 0;
}

int cmd_ablate(const std::string& variants_csv, const std::string& config_path,
               const std::string& seeds_csv, const std::string& out_dir) {
    const ExperimentConfig cfg = load_experiment_config(config_path);
    const auto result = run_ablation(parse_string_list(variants_csv), cfg,
                                     parse_seed_list(seeds_csv));
    ensure_dir(out_dir);
    write_text_file(out_dir + "/ablation_runs.csv", ablation_runs_csv(result));
    write_text_file(out_dir + "/ablation_summary.csv", ablation_summary_csv(result));
    write_text_file(out_dir + "/ablation_summary.json", ablation_summary_json(result));
    std::cout << "ablation finished: " << result.runs.size() << " runs, summary in " << out_dir
              << "\n";
    return 0;
}

int cmd_sweep_heads(const std::string& g_csv, const std::string& config_path,
                    const std::string& seeds_csv, const std::string& out_dir) {
    const ExperimentConfig cfg = load_experiment_config(config_path);
    const auto rows = head_count_sweep(parse_int_list(g_csv), cfg, parse_seed_list(seeds_csv));
    ensure_dir(out_dir);
    write_text_file(out_dir + "/head_sweep.csv", head_sweep_csv(rows));
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows) {
        arr.push_back({{"seed", r.seed},
                       {"heads", r.heads},
                       {"category", r.category},
                       {"quantile", r.quantile},
                       {"wql", r.wql ? nlohmann::json(*r.wql) : nlohmann::json()}});
    }
    write_text_file(out_dir + "/head_sweep.json", arr.dump(2) + "\n");
    std::cout << "head sweep finished: " << rows.size() << " rows in " << out_dir << "\n";
    return 0;
}

int cmd_bias_sampling(const std::string& config_path, const std::string& cutoffs_csv,
                      const std::string& seeds_csv, const std::string& out_dir) {
    const ExperimentConfig cfg = load_experiment_config(config_path);
    const auto cutoffs = parse_double_list(cutoffs_csv);
    if (cutoffs.size() != 2) throw std::invalid_argument("--cutoffs needs exactly two values");
    const auto rows =
        run_bias_sampling_experiment(cfg, cutoffs[0], cutoffs[1], parse_seed_list(seeds_csv));
    ensure_dir(out_dir);
    write_text_file(out_dir + "/bias_sampling.csv", bias_sampling_csv(rows));
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows) {
        arr.push_back({{"seed", r.seed},
                       {"category", r.category},
                       {"quantile", r.quantile},
                       {"metric", r.metric},
                       {"baseline", r.baseline},
                       {"experiment", r.experiment},
                       {"delta_pct", r.delta_pct ? nlohmann::json(*r.delta_pct) : nlohmann::json()}});
    }
    write_text_file(out_dir + "/bias_sampling.json", arr.dump(2) + "\n");
    std::cout << "bias-sampling study finished: " << rows.size() << " rows in " << out_dir << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"SPADE-S style sparsity-robust quantile forecaster"};
    app.require_subcommand(1);

    std::string config_path, data_dir, out_dir, ckpt_path, baseline_path;
    std::string sparsity_csv, variants_csv, seeds_csv, g_csv, cutoffs_csv = "0.8,0.1", fcds_csv;
    std::uint64_t seed = 0;
    bool seed_set = false;

    auto* gen = app.add_subcommand("gen-data", "generate a synthetic mixed-magnitude dataset");
    gen->add_option("--config", config_path)->required();
    gen->add_option("--seed", seed)->required();
    gen->add_option("--out", out_dir)->required();

    auto* train = app.add_subcommand("train", "train a model on a dataset directory");
    train->add_option("--config", config_path)->required();
    train->add_option("--data", data_dir)->required();
    train->add_option("--out", out_dir)->required();
    train->add_option("--seed", seed)->each([&](const std::string&) { seed_set = true; });

    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint against a dataset");
    eval->add_option("--model", ckpt_path)->required();
    eval->add_option("--data", data_dir)->required();
    eval->add_option("--baseline", baseline_path);
    eval->add_option("--out", out_dir)->required();
    eval->add_option("--fcds", fcds_csv, "comma-separated forecast creation dates");

    auto* sim = app.add_subcommand("sim", "simulation experiments");
    sim->require_subcommand(1);
    auto* collapse = sim->add_subcommand("collapse", "sparsity-induced distribution collapse");
    collapse->add_option("--sparsity", sparsity_csv)->required();
    collapse->add_option("--seed", seed)->required();
    collapse->add_option("--out", out_dir)->required();

    auto* ablate = app.add_subcommand("ablate", "train and compare ablation variants");
    ablate->add_option("--variants", variants_csv)->required();
    ablate->add_option("--config", config_path)->required();
    ablate->add_option("--seeds", seeds_csv)->required();
    ablate->add_option("--out", out_dir)->required();

    auto* sweep = app.add_subcommand("sweep-heads", "head-count sweep of the full model");
    sweep->add_option("--g", g_csv)->required();
    sweep->add_option("--config", config_path)->required();
    sweep->add_option("--seeds", seeds_csv)->required();
    sweep->add_option("--out", out_dir)->required();

    auto* bias = app.add_subcommand("bias-sampling", "importance-sampling cutoff comparison");
    bias->add_option("--config", config_path)->required();
    bias->add_option("--cutoffs", cutoffs_csv, "two cutoff quantiles (default 0.8,0.1)");
    bias->add_option("--seeds", seeds_csv)->required();
    bias->add_option("--out", out_dir)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_data(config_path, seed, out_dir);
        if (train->parsed()) {
            return cmd_train(config_path, data_dir, out_dir,
                             seed_set ? std::optional<std::uint64_t>(seed) : std::nullopt);
        }
        if (eval->parsed()) return cmd_eval(ckpt_path, data_dir, baseline_path, out_dir, fcds_csv);
        if (sim->parsed() && collapse->parsed()) return cmd_sim_collapse(sparsity_csv, seed, out_dir);
        if (ablate->parsed()) return cmd_ablate(variants_csv, config_path, seeds_csv, out_dir);
        if (sweep->parsed()) return cmd_sweep_heads(g_csv, config_path, seeds_csv, out_dir);
        if (bias->parsed()) return cmd_bias_sampling(config_path, cutoffs_csv, seeds_csv, out_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cerr << "error: no subcommand\n";
    return 1;
}
