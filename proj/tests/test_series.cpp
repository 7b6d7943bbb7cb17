#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "spades/csv.hpp"
#include "spades/series.hpp"

#include <filesystem>
#include <fstream>
#include <set>

using namespace spades;

namespace {

TimeSeriesRecord flat_record(std::size_t len, double value, long long first_listing = 0) {
    TimeSeriesRecord rec;
    rec.id = "fixture";
    rec.target.assign(len, value);
    rec.past_cov.assign(len, {});
    rec.first_listing = first_listing;
    return rec;
}

} // namespace

TEST_CASE("categorize_magnitude buckets match the table") {
    CHECK(categorize_magnitude(100.0) == MagnitudeCategory::Medium);
    CHECK(categorize_magnitude(0.0) == MagnitudeCategory::Zero);
    CHECK(categorize_magnitude(20000.0) == MagnitudeCategory::SuperFast);
    // Boundary values land in the lower (closed-above) bucket.
    CHECK(categorize_magnitude(2.0) == MagnitudeCategory::SuperSlow);
    CHECK(categorize_magnitude(52.0) == MagnitudeCategory::Slow);
    CHECK(categorize_magnitude(365.0) == MagnitudeCategory::Medium);
    CHECK(categorize_magnitude(10000.0) == MagnitudeCategory::Fast);
    CHECK(categorize_magnitude(2.0000001) == MagnitudeCategory::Slow);
    CHECK_THROWS_AS(categorize_magnitude(-1.0), std::invalid_argument);
}

TEST_CASE("is_sparse requires a zero window and an old listing") {
    auto rec = flat_record(120, 0.0);
    CHECK(is_sparse(rec, 100, 52));

    rec.target[80] = 1.0; // one unit inside the window
    CHECK_FALSE(is_sparse(rec, 100, 52));

    auto fresh = flat_record(120, 0.0, /*first_listing=*/60);
    CHECK_FALSE(is_sparse(fresh, 100, 52)); // new product exemption
    CHECK(is_sparse(fresh, 119, 52));       // old enough by the end

    CHECK_THROWS_AS(is_sparse(rec, 200, 52), std::invalid_argument);
    CHECK_THROWS_AS(is_sparse(rec, -1, 52), std::invalid_argument);
}

TEST_CASE("is_sparse implies a Zero categorization") {
    auto rec = flat_record(120, 0.0);
    rec.target[10] = 3.0;
    for (long long fcd = 62; fcd < 120; ++fcd) {
        if (is_sparse(rec, fcd, 52)) {
            CHECK(categorize_magnitude(trailing_aggregate(rec, fcd, 52)) ==
                  MagnitudeCategory::Zero);
        }
    }
}

TEST_CASE("gen_poisson_sparse forces the exact number of zeros") {
    // With rate 1000 natural zeros are impossible, so every zero is forced.
    const auto seq = gen_poisson_sparse(1000.0, 100, 0.9, 7);
    std::size_t zeros = 0;
    for (double v : seq) zeros += (v == 0.0);
    CHECK(zeros == 90);

    const auto none = gen_poisson_sparse(1000.0, 100, 0.0, 7);
    for (double v : none) CHECK(v > 0.0);

    CHECK(gen_poisson_sparse(5.0, 100, 0.5, 11) == gen_poisson_sparse(5.0, 100, 0.5, 11));
    CHECK_THROWS_AS(gen_poisson_sparse(5.0, 100, 1.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(gen_poisson_sparse(5.0, 100, -0.1, 1), std::invalid_argument);
}

TEST_CASE("higher sparsity lowers mean demand (over many seeds)") {
    double mean_lo = 0.0, mean_hi = 0.0;
    for (std::uint64_t seed = 0; seed < 120; ++seed) {
        for (double v : gen_poisson_sparse(5.0, 100, 0.2, seed)) mean_lo += v;
        for (double v : gen_poisson_sparse(5.0, 100, 0.8, seed)) mean_hi += v;
    }
    CHECK(mean_hi < mean_lo);
}

TEST_CASE("build_horizon_grid enumerates valid pairs") {
    const auto grid = build_horizon_grid(3, {1, 2});
    const std::set<std::pair<int, int>> expected = {{1, 1}, {2, 1}, {3, 1}, {1, 2}, {2, 2}};
    std::set<std::pair<int, int>> got;
    for (const auto& p : grid.pairs) got.emplace(p.lead_time, p.span);
    CHECK(got == expected);
    CHECK(grid.max_span == 2);

    CHECK(build_horizon_grid(4, {1}).pairs.size() == 4);
    CHECK(build_horizon_grid(52, {1, 2, 4, 8, 13, 26}).max_span == 26);
    CHECK_THROWS_AS(build_horizon_grid(0, {1}), std::invalid_argument);
    CHECK_THROWS_AS(build_horizon_grid(3, std::vector<int>{}), std::invalid_argument);
    CHECK_THROWS_AS(build_horizon_grid(2, {5}), std::invalid_argument);
}

TEST_CASE("importance weights flatten below the cutoff magnitude") {
    std::vector<double> mags;
    for (int i = 1; i <= 10; ++i) mags.push_back(i);
    const auto w = importance_weights(mags, 0.8);
    CHECK(w.cutoff_magnitude == 8.0); // nearest-rank P80 of 1..10
    for (int i = 0; i < 8; ++i) CHECK(w.weights[i] == 8.0);
    CHECK(w.weights[8] == 9.0);
    CHECK(w.weights[9] == 10.0);

    // Monotone non-decreasing in magnitude.
    for (std::size_t i = 1; i < w.weights.size(); ++i) CHECK(w.weights[i] >= w.weights[i - 1]);
}

TEST_CASE("importance weights limit cases") {
    // Cutoff -> 0+ with distinct magnitudes: proportional to magnitude.
    std::vector<double> mags = {3.0, 1.0, 5.0, 9.0};
    const auto w = importance_weights(mags, 0.01);
    for (std::size_t i = 0; i < mags.size(); ++i) CHECK(w.weights[i] == mags[i]);

    // All equal magnitudes: all weights equal.
    const auto eq = importance_weights({4.0, 4.0, 4.0}, 0.5);
    CHECK(eq.weights == std::vector<double>{4.0, 4.0, 4.0});

    // All-zero magnitudes degenerate to uniform positive weights.
    const auto zero = importance_weights({0.0, 0.0}, 0.8);
    CHECK(zero.weights[0] == zero.weights[1]);
    CHECK(zero.weights[0] > 0.0);

    // Mixed zeros: zero-magnitude series still get a positive weight.
    const auto mixed = importance_weights({0.0, 0.0, 0.0, 0.0, 2.0}, 0.5);
    for (double x : mixed.weights) CHECK(x > 0.0);

    CHECK_THROWS_AS(importance_weights({}, 0.8), std::invalid_argument);
    CHECK_THROWS_AS(importance_weights({1.0}, 1.0), std::invalid_argument);
}

TEST_CASE("generator hits configured categories exactly at the reference fcd") {
    DatasetConfig cfg;
    cfg.history_len = 120;
    cfg.backtest_len = 16;
    cfg.max_future_lead = 6;
    cfg.categories = {
        {MagnitudeCategory::Zero, 45, 0.0, 0.4, 1.5, 5},
        {MagnitudeCategory::SuperSlow, 5, 2.0, 0, 0, 0},
        {MagnitudeCategory::Slow, 20, 20.0, 0, 0, 0},
        {MagnitudeCategory::Medium, 15, 150.0, 0, 0, 0},
        {MagnitudeCategory::Fast, 10, 1500.0, 0, 0, 0},
        {MagnitudeCategory::SuperFast, 5, 15000.0, 0, 0, 0},
    };
    const auto data = gen_mixed_magnitude_dataset(cfg, 21);
    REQUIRE(data.size() == 100);
    const long long ref = static_cast<long long>(cfg.history_len) - 1;
    std::size_t i = 0;
    for (const auto& block : cfg.categories) {
        for (std::size_t k = 0; k < block.count; ++k, ++i) {
            const auto cat = categorize_magnitude(trailing_aggregate(data[i], ref, cfg.window));
            CHECK(cat == block.category);
        }
    }
}

TEST_CASE("a 90% zero mix realizes at least 85% Zero series") {
    DatasetConfig cfg;
    cfg.history_len = 120;
    cfg.backtest_len = 8;
    cfg.max_future_lead = 4;
    cfg.categories = {
        {MagnitudeCategory::Zero, 180, 0.0, 0.4, 1.5, 5},
        {MagnitudeCategory::Slow, 20, 20.0, 0, 0, 0},
    };
    const auto data = gen_mixed_magnitude_dataset(cfg, 5);
    const long long ref = static_cast<long long>(cfg.history_len) - 1;
    std::size_t zero = 0;
    for (const auto& rec : data) {
        zero += categorize_magnitude(trailing_aggregate(rec, ref, cfg.window)) ==
                MagnitudeCategory::Zero;
    }
    CHECK(static_cast<double>(zero) / static_cast<double>(data.size()) >= 0.85);
}

TEST_CASE("single-category config yields only that category") {
    DatasetConfig cfg;
    cfg.history_len = 110;
    cfg.backtest_len = 8;
    cfg.max_future_lead = 4;
    cfg.categories = {{MagnitudeCategory::Slow, 40, 20.0, 0, 0, 0}};
    const auto data = gen_mixed_magnitude_dataset(cfg, 9);
    const long long ref = static_cast<long long>(cfg.history_len) - 1;
    for (const auto& rec : data) {
        CHECK(categorize_magnitude(trailing_aggregate(rec, ref, cfg.window)) ==
              MagnitudeCategory::Slow);
    }
    CHECK_THROWS_AS(gen_mixed_magnitude_dataset(DatasetConfig{}, 1), std::invalid_argument);
}

TEST_CASE("dataset CSV export is deterministic and round-trips") {
    DatasetConfig cfg;
    cfg.history_len = 80;
    cfg.backtest_len = 8;
    cfg.max_future_lead = 4;
    cfg.window = 26;
    cfg.categories = {
        {MagnitudeCategory::Zero, 6, 0.0, 0.5, 1.5, 4},
        {MagnitudeCategory::Slow, 6, 20.0, 0, 0, 0},
    };
    const auto dir1 = std::filesystem::temp_directory_path() / "spades_csv_a";
    const auto dir2 = std::filesystem::temp_directory_path() / "spades_csv_b";
    std::filesystem::create_directories(dir1);
    std::filesystem::create_directories(dir2);

    const auto data1 = gen_mixed_magnitude_dataset(cfg, 33);
    const auto data2 = gen_mixed_magnitude_dataset(cfg, 33);
    write_dataset_csv(data1, dir1.string());
    write_dataset_csv(data2, dir2.string());

    auto slurp = [](const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    CHECK(slurp(dir1 / "dataset.csv") == slurp(dir2 / "dataset.csv"));
    CHECK(slurp(dir1 / "future_cov.csv") == slurp(dir2 / "future_cov.csv"));

    const auto loaded = read_dataset_csv(dir1.string());
    REQUIRE(loaded.size() == data1.size());
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        CHECK(loaded[i].id == data1[i].id);
        CHECK(loaded[i].target == data1[i].target);
        CHECK(loaded[i].past_cov == data1[i].past_cov);
        CHECK(loaded[i].static_cov == data1[i].static_cov);
        CHECK(loaded[i].first_listing == data1[i].first_listing);
    }
    // Future covariates round-trip wherever the horizon stays in range.
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        const auto& a = loaded[i].future_cov;
        const auto& b = data1[i].future_cov;
        for (std::size_t t = 0; t < b.size(); ++t) {
            for (std::size_t f = 0; f < b[t].size(); ++f) {
                for (std::size_t l = 0; l < b[t][f].size(); ++l) {
                    if (t + l + 1 < data1[i].length()) CHECK(a[t][f][l] == b[t][f][l]);
                }
            }
        }
    }
}

TEST_CASE("record validation catches broken invariants") {
    auto rec = flat_record(10, 0.0);
    rec.target[3] = -1.0;
    CHECK_THROWS_AS(rec.validate(), std::invalid_argument);

    auto late = flat_record(10, 0.0, /*first_listing=*/5);
    late.target[2] = 1.0; // demand before listing
    CHECK_THROWS_AS(late.validate(), std::invalid_argument);

    auto ragged = flat_record(10, 1.0);
    ragged.past_cov.pop_back();
    CHECK_THROWS_AS(ragged.validate(), std::invalid_argument);
}
