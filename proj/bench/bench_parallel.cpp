// Timing comparison between the serial reference paths and the OpenMP
// kernels. Both must agree bitwise; the deterministic chunked reductions
// make the results independent of thread count.

#include "spades/experiments.hpp"
#include "spades/model.hpp"
#include "spades/numeric.hpp"
#include "spades/rng.hpp"
#include "spades/series.hpp"

#include <chrono>
#include <cstdio>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace spades;

namespace {

double now_ms() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

template <typename F>
double time_ms(F&& f, int reps) {
    const double t0 = now_ms();
    for (int i = 0; i < reps; ++i) f();
    return (now_ms() - t0) / reps;
}

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.dataset.history_len = 120;
    cfg.dataset.backtest_len = 16;
    cfg.dataset.window = 52;
    cfg.dataset.max_future_lead = 6;
    cfg.dataset.categories = {
        {MagnitudeCategory::Zero, 120, 0.0, 0.5, 1.5, 5},
        {MagnitudeCategory::Slow, 60, 20.0, 0, 0, 0},
        {MagnitudeCategory::Medium, 20, 150.0, 0, 0, 0},
    };
    cfg.model.horizon = build_horizon_grid(6, {1, 2, 4});
    cfg.model.encoder.heads = 4;
    cfg.model.encoder.hidden_channels = 6;
    cfg.model.encoder.combine_width = 12;
    cfg.model.context_len = 104;
    cfg.model.train.seed = 7;
    cfg.model.train.epochs = 1;
    cfg.model.train.steps_per_epoch = 4;
    cfg.model.train.batch_size = 32;
    cfg.model.train.train_period_end = cfg.dataset.history_len;
    return cfg;
}

} // namespace

int main() {
    int threads = 1;
#ifdef _OPENMP
    threads = omp_get_max_threads();
#endif
    std::printf("max threads: %d\n\n", threads);

    // Deterministic reduction: serial reference vs OpenMP blocks.
    {
        Rng rng(11);
        std::vector<double> values(1 << 22);
        for (auto& v : values) v = rng.normal();
        double serial = 0.0, parallel = 0.0;
        const double t_serial = time_ms([&] { serial = pairwise_sum(values); }, 20);
        const double t_parallel = time_ms([&] { parallel = pairwise_sum_parallel(values); }, 20);
        std::printf("pairwise_sum      %8.3f ms  (serial reference)\n", t_serial);
        std::printf("pairwise_sum_omp  %8.3f ms  speedup %.2fx  bitwise equal: %s\n\n",
                    t_parallel, t_serial / t_parallel, serial == parallel ? "yes" : "NO");
    }

    // Batch evaluation: forward passes over (series, fcd) tasks.
    {
        const ExperimentConfig cfg = small_config();
        const auto dataset = gen_mixed_magnitude_dataset(cfg.dataset, 3);
        ModelConfig mc = cfg.model;
        SpadeSModel model(std::move(mc));
        const auto fcds = cfg.eval_fcds();

        QuantileForecast serial_fc, parallel_fc;
#ifdef _OPENMP
        omp_set_num_threads(1);
#endif
        const double t_serial = time_ms([&] { serial_fc = model.evaluate(dataset, fcds); }, 3);
#ifdef _OPENMP
        omp_set_num_threads(threads);
#endif
        const double t_parallel = time_ms([&] { parallel_fc = model.evaluate(dataset, fcds); }, 3);
        bool equal = serial_fc.points.size() == parallel_fc.points.size();
        for (std::size_t i = 0; equal && i < serial_fc.points.size(); ++i) {
            equal = serial_fc.points[i].forecast == parallel_fc.points[i].forecast;
        }
        std::printf("evaluate          %8.1f ms  (1 thread)\n", t_serial);
        std::printf("evaluate_omp      %8.1f ms  speedup %.2fx  bitwise equal: %s\n\n",
                    t_parallel, t_serial / t_parallel, equal ? "yes" : "NO");
    }

    // One training epoch: chunked gradient accumulation.
    {
        const ExperimentConfig cfg = small_config();
        const auto dataset = gen_mixed_magnitude_dataset(cfg.dataset, 3);

#ifdef _OPENMP
        omp_set_num_threads(1);
#endif
        SpadeSModel serial_model(cfg.model);
        const double t_serial = time_ms([&] { serial_model.train(dataset); }, 1);
#ifdef _OPENMP
        omp_set_num_threads(threads);
#endif
        SpadeSModel parallel_model(cfg.model);
        const double t_parallel = time_ms([&] { parallel_model.train(dataset); }, 1);

        bool equal = true;
        for (std::size_t i = 0; i < serial_model.params().entries().size(); ++i) {
            equal = equal && serial_model.params().entries()[i].second->v ==
                                 parallel_model.params().entries()[i].second->v;
        }
        std::printf("train epoch       %8.1f ms  (1 thread)\n", t_serial);
        std::printf("train epoch omp   %8.1f ms  speedup %.2fx  bitwise equal: %s\n",
                    t_parallel, t_serial / t_parallel, equal ? "yes" : "NO");
    }
    return 0;
}
