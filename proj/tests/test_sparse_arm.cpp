#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "spades/adam.hpp"
#include "spades/numeric.hpp"
#include "spades/rng.hpp"
#include "spades/sparse_arm.hpp"

#include <cmath>

using namespace spades;

namespace {

// Bisection CDF-inversion oracle, independent of the closed forms.
double invert_cdf(double q, double lo, double hi, const std::function<double(double)>& cdf) {
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (cdf(mid) < q) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

std::vector<std::vector<double>> zero_history(std::size_t T, std::size_t F) {
    return std::vector<std::vector<double>>(T, std::vector<double>(F, 0.0));
}

} // namespace

TEST_CASE("patching splits oldest-first with a padded, masked tail") {
    auto hist = zero_history(52, 3);
    for (std::size_t t = 0; t < 52; ++t) hist[t][0] = static_cast<double>(t);
    const auto pe = patch(hist, 13);
    REQUIRE(pe.patches.shape() == std::vector<std::size_t>{4, 39});
    for (bool p : pe.padded) CHECK_FALSE(p);
    CHECK(pe.patches(0, 0) == 0.0);        // oldest first
    CHECK(pe.patches(3, 12 * 3) == 51.0);  // newest last

    const auto partial = patch(zero_history(50, 3), 13);
    REQUIRE(partial.patches.dim(0) == 4);
    CHECK(partial.padded == std::vector<bool>{false, false, false, true});

    const auto identity = patch(zero_history(5, 2), 1);
    CHECK(identity.patches.shape() == std::vector<std::size_t>{5, 2});

    CHECK_THROWS_AS(patch({}, 13), std::invalid_argument);
    CHECK_THROWS_AS(patch(zero_history(5, 2), 0), std::invalid_argument);
}

TEST_CASE("exponential ICDF closed form") {
    CHECK(exp_icdf(0.9, 4.0, 4.0, 1.0) == doctest::Approx(std::log(10.0)).epsilon(1e-14));
    CHECK(exp_icdf(0.9, 2.0, 4.0, 2.0) == doctest::Approx(std::log(10.0)).epsilon(1e-14));
    CHECK(exp_icdf(1e-12, 4.0, 4.0, 1.0) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK_THROWS_AS(exp_icdf(0.0, 1.0, 4.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(exp_icdf(1.0, 1.0, 4.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(exp_icdf(0.9, 5.0, 4.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(exp_icdf(0.9, 1.0, 4.0, 0.0), std::invalid_argument);
}

TEST_CASE("exp ICDF matches the bisection oracle on a log grid") {
    for (double theta : {0.01, 0.1, 1.0, 10.0, 100.0}) {
        for (double q = 0.51; q < 0.995; q += 0.02) {
            const double span = 2.0, max_span = 4.0;
            const double scale = span / max_span * theta;
            const double oracle = invert_cdf(q, 0.0, 1e5, [&](double x) {
                return 1.0 - std::exp(-x / scale);
            });
            CHECK(std::abs(exp_icdf(q, span, max_span, theta) - oracle) < 1e-9);
        }
    }
}

TEST_CASE("truncated-normal ICDF values and ReLU clamp") {
    CHECK(truncnorm_icdf(0.5, 4.0, 8.0, 2.0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(truncnorm_icdf(0.9, 1.0, 0.0, 1.0) == doctest::Approx(1.281551565545).epsilon(1e-9));
    // Quantile low enough that mu + sigma * z < 0: clipped to zero.
    CHECK(truncnorm_icdf(0.01, 1.0, 0.5, 1.0) == 0.0);
    CHECK_THROWS_AS(truncnorm_icdf(0.9, 0.5, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(truncnorm_icdf(0.9, 1.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("truncnorm ICDF matches the bisection oracle") {
    for (double sigma : {0.05, 0.5, 5.0}) {
        for (double mu : {-1.0, 0.0, 3.0}) {
            for (double q = 0.51; q < 0.995; q += 0.02) {
                const double n = 4.0;
                const double m = mu / n, s = sigma / std::sqrt(n);
                const double oracle = invert_cdf(q, -1e4, 1e4, [&](double x) {
                    return normal_cdf((x - m) / s);
                });
                const double expect = std::max(0.0, oracle);
                CHECK(std::abs(truncnorm_icdf(q, n, mu, sigma) - expect) < 1e-9);
            }
        }
    }
}

TEST_CASE("gamma parameter algebra") {
    const auto [k, theta] = gamma_aggregate({2.0, 3.0}, 1.5);
    CHECK(k == 5.0);
    CHECK(theta == 1.5);
    const auto single = gamma_aggregate({7.0}, 2.0);
    CHECK(single.first == 7.0);
    CHECK(gamma_disaggregate_shape(10.0, 1.0, 5.0) == doctest::Approx(2.0));
    CHECK_THROWS_AS(gamma_aggregate({}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(gamma_aggregate({-1.0}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(gamma_aggregate({1.0}, 0.0), std::invalid_argument);
}

TEST_CASE("truncated-normal aggregate/disaggregate round trip is exact") {
    const double mu_s = 7.25, var_s = 3.5;
    const double n = 5.0;
    const double mu = mu_s / n, var = var_s / n;
    CHECK(mu * n == doctest::Approx(mu_s).epsilon(1e-15));
    CHECK(var * n == doctest::Approx(var_s).epsilon(1e-15));
}

TEST_CASE("sparse forecast: zeros at q <= 0.5, monotone in q and span") {
    const HorizonSpec horizon = build_horizon_grid(6, {1, 2, 4});
    const std::vector<double> quantiles = {0.3, 0.5, 0.7, 0.9};

    for (const auto family : {SparseFamily::Exponential, SparseFamily::TruncatedNormal}) {
        SparseNetConfig cfg;
        cfg.family = family;
        cfg.patch_len = 5;
        cfg.embed_dim = 6;
        ParamStore store;
        SparseQuantileNetwork net(cfg, 2, store, "sparse");
        Rng rng(20);
        for (const auto& [name, t] : store.entries()) ParamStore::init_xavier(t, rng);
        // Push the mean head negative to exercise the clamp path.
        if (family == SparseFamily::TruncatedNormal) store.get("sparse.head.b")->v[0] = -2.0;

        auto hist = zero_history(20, 2);
        hist[3][1] = 1.0;
        const auto fc = sparse_forecast(net, hist, horizon, quantiles);
        REQUIRE(fc.size() == horizon.pairs.size());
        for (std::size_t h = 0; h < fc.size(); ++h) {
            CHECK(fc[h][0] == 0.0);
            CHECK(fc[h][1] == 0.0); // boundary q = 0.5 forced to zero
            CHECK(fc[h][2] >= 0.0);
            CHECK(fc[h][3] >= fc[h][2]); // monotone in q
        }
        // Monotone (exponential: exactly linear) in span at fixed lead.
        for (std::size_t a = 0; a < horizon.pairs.size(); ++a) {
            for (std::size_t b = 0; b < horizon.pairs.size(); ++b) {
                if (horizon.pairs[a].lead_time != horizon.pairs[b].lead_time) continue;
                if (horizon.pairs[a].span >= horizon.pairs[b].span) continue;
                CHECK(fc[a][3] <= fc[b][3] + 1e-15);
                if (family == SparseFamily::Exponential) {
                    const double ratio = static_cast<double>(horizon.pairs[b].span) /
                                         static_cast<double>(horizon.pairs[a].span);
                    CHECK(fc[b][3] == doctest::Approx(fc[a][3] * ratio).epsilon(1e-12));
                }
            }
        }
    }
}

TEST_CASE("exponential sparse forecast composes the closed form") {
    SparseNetConfig cfg;
    cfg.patch_len = 4;
    ParamStore store;
    SparseQuantileNetwork net(cfg, 1, store, "sparse");
    Rng rng(21);
    for (const auto& [name, t] : store.entries()) ParamStore::init_xavier(t, rng);

    const auto hist = zero_history(8, 1);
    const double theta = net.params(hist).theta;
    const HorizonSpec horizon = build_horizon_grid(4, {1, 4});
    const auto fc = sparse_forecast(net, hist, horizon, {0.5, 0.9});
    for (std::size_t h = 0; h < horizon.pairs.size(); ++h) {
        const auto& pair = horizon.pairs[h];
        CHECK(fc[h][1] ==
              doctest::Approx(exp_icdf(0.9, pair.span, 4.0, theta)).epsilon(1e-12));
    }
}

TEST_CASE("gamma family is rejected at forecast time") {
    SparseNetConfig cfg;
    cfg.family = SparseFamily::Gamma;
    cfg.patch_len = 4;
    ParamStore store;
    SparseQuantileNetwork net(cfg, 1, store, "sparse");
    const HorizonSpec horizon = build_horizon_grid(2, {1});
    CHECK_THROWS_AS(sparse_forecast(net, zero_history(8, 1), horizon, {0.9}),
                    unsupported_family_error);
}

TEST_CASE("sparse quantile matrix differentiates through the links") {
    const HorizonSpec horizon = build_horizon_grid(4, {1, 2});
    const std::vector<double> quantiles = {0.5, 0.7, 0.9};
    for (const auto family : {SparseFamily::Exponential, SparseFamily::TruncatedNormal}) {
        SparseNetConfig cfg;
        cfg.family = family;
        cfg.patch_len = 3;
        cfg.embed_dim = 4;
        cfg.hidden = {5};
        ParamStore store;
        SparseQuantileNetwork net(cfg, 2, store, "sparse");
        Rng rng(22);
        for (const auto& [name, t] : store.entries()) ParamStore::init_xavier(t, rng);
        if (family == SparseFamily::TruncatedNormal) store.get("sparse.head.b")->v[0] = 0.4;

        auto hist = zero_history(10, 2);
        hist[2][0] = 2.0;
        hist[7][1] = -0.5;
        auto build = [&](Tape& t) {
            Var raw = net.raw_params(t, hist);
            Var m = sparse_quantile_matrix(t, raw, family, horizon, quantiles);
            return sum_all(t, m);
        };
        CHECK(grad_check(build, store.tensors()) < 1e-6);
    }
}
