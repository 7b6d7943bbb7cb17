#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "spades/adam.hpp"
#include "spades/encoder.hpp"
#include "spades/rng.hpp"

#include <cmath>

using namespace spades;

namespace {

Var leaf_matrix(std::size_t T, std::size_t C, Rng& rng) {
    Tensor t({T, C});
    for (auto& v : t.v) v = rng.uniform(-1.0, 1.0);
    return make_var(std::move(t));
}

void randomize(ParamStore& store, std::uint64_t seed) {
    Rng rng(seed);
    for (const auto& [name, t] : store.entries()) ParamStore::init_xavier(t, rng);
}

} // namespace

TEST_CASE("peak filter leaves constants and identity mode untouched") {
    const std::vector<double> flat(30, 4.0);
    CHECK(peak_filter(flat, {}) == flat);

    std::vector<double> spiky(30, 2.0);
    spiky[20] = 200.0;
    PeakFilterConfig identity;
    identity.identity = true;
    CHECK(peak_filter(spiky, identity) == spiky);
}

TEST_CASE("peak filter clips a spike to the trailing cap") {
    std::vector<double> spiky(30, 2.0);
    spiky[20] = 200.0;
    const auto filtered = peak_filter(spiky, {});
    CHECK(filtered[20] == doctest::Approx(8.0)); // 4x trailing mean of 2
    for (std::size_t t = 0; t < spiky.size(); ++t) {
        if (t != 20) CHECK(filtered[t] == spiky[t]);
    }
}

TEST_CASE("peak filter never increases values and skips zero-mean stretches") {
    Rng rng(1);
    std::vector<double> series(100, 0.0);
    for (auto& v : series) v = rng.uniform() < 0.3 ? rng.uniform(0.0, 10.0) : 0.0;
    const auto filtered = peak_filter(series, {});
    for (std::size_t t = 0; t < series.size(); ++t) CHECK(filtered[t] <= series[t]);

    // A first sale after a silent stretch passes through unclipped.
    std::vector<double> quiet(40, 0.0);
    quiet[35] = 7.0;
    CHECK(peak_filter(quiet, {})[35] == 7.0);
}

TEST_CASE("G=1 encoder equals a single stack plus linear map") {
    EncoderConfig cfg;
    cfg.heads = 1;
    cfg.hidden_channels = 4;
    cfg.dilations = {1, 2};
    cfg.combine_width = 3;

    ParamStore store;
    MultiHeadEncoder enc(cfg, 2, store, "encoder");
    randomize(store, 5);

    Rng rng(6);
    Var x = leaf_matrix(12, 2, rng);
    Tape tape;
    const Encoding e = enc.forward(tape, x);
    REQUIRE(e.values->shape() == std::vector<std::size_t>{12, 3});

    // Manual single stack with the same parameters.
    Tape t2;
    Var h = x;
    h = dilated_causal_conv(t2, h, store.get("encoder.head0.conv0.kernel"),
                            store.get("encoder.head0.conv0.bias"), 1);
    h = tanh_op(t2, h);
    h = dilated_causal_conv(t2, h, store.get("encoder.head0.conv1.kernel"),
                            store.get("encoder.head0.conv1.bias"), 2);
    h = tanh_op(t2, h);
    Var manual = linear(t2, h, store.get("encoder.combine.w"), store.get("encoder.combine.b"));
    CHECK(e.values->v == manual->v);
}

TEST_CASE("zeroing the second head's combine rows reduces G=2 to G=1") {
    EncoderConfig cfg1;
    cfg1.heads = 1;
    cfg1.hidden_channels = 3;
    cfg1.dilations = {1, 2};
    cfg1.combine_width = 4;
    EncoderConfig cfg2 = cfg1;
    cfg2.heads = 2;

    ParamStore s1, s2;
    MultiHeadEncoder enc1(cfg1, 2, s1, "encoder");
    MultiHeadEncoder enc2(cfg2, 2, s2, "encoder");
    randomize(s1, 7);
    randomize(s2, 8);

    // Copy head-1 parameters and combine rows; zero head-2 rows.
    for (int l = 0; l < 2; ++l) {
        const std::string k = "encoder.head0.conv" + std::to_string(l);
        s2.get(k + ".kernel")->v = s1.get(k + ".kernel")->v;
        s2.get(k + ".bias")->v = s1.get(k + ".bias")->v;
    }
    Var w1 = s1.get("encoder.combine.w");
    Var w2 = s2.get("encoder.combine.w");
    for (std::size_t i = 0; i < w2->dim(0); ++i) {
        for (std::size_t j = 0; j < w2->dim(1); ++j) {
            w2->v[i * w2->dim(1) + j] = i < 3 ? w1->v[i * w1->dim(1) + j] : 0.0;
        }
    }
    s2.get("encoder.combine.b")->v = s1.get("encoder.combine.b")->v;

    Rng rng(9);
    Var x = leaf_matrix(15, 2, rng);
    Tape ta, tb;
    CHECK(enc1.forward(ta, x).values->v == enc2.forward(tb, x).values->v);
}

TEST_CASE("multi-head encoder output is causal for G=6") {
    EncoderConfig cfg;
    cfg.heads = 6;
    cfg.hidden_channels = 3;
    cfg.dilations = {1, 2, 4};
    cfg.combine_width = 5;

    ParamStore store;
    MultiHeadEncoder enc(cfg, 1, store, "encoder");
    randomize(store, 11);

    Rng rng(12);
    Tensor base({16, 1});
    for (auto& v : base.v) v = rng.uniform(-1.0, 1.0);

    Tape t1;
    const auto y1 = enc.forward(t1, make_var(base)).values;
    Tensor bumped = base;
    bumped(9, 0) += 2.0;
    Tape t2;
    const auto y2 = enc.forward(t2, make_var(std::move(bumped))).values;
    for (std::size_t t = 0; t < 9; ++t) {
        for (std::size_t c = 0; c < 5; ++c) CHECK(y1->v[t * 5 + c] == y2->v[t * 5 + c]);
    }
    const auto mask = left_pad_mask(16, static_cast<std::size_t>(cfg.receptive_field()));
    CHECK(cfg.receptive_field() == 8);
    CHECK(mask[6]);
    CHECK_FALSE(mask[7]);
}

TEST_CASE("identically initialized heads agree; random init breaks symmetry") {
    EncoderConfig cfg;
    cfg.heads = 2;
    cfg.hidden_channels = 3;
    cfg.dilations = {1, 2};
    cfg.combine_width = 6;

    ParamStore store;
    MultiHeadEncoder enc(cfg, 1, store, "encoder");
    randomize(store, 13);

    // Same parameters in both heads: identical pre-combine outputs, seen
    // through an identity-block combine map.
    for (int l = 0; l < 2; ++l) {
        const std::string a = "encoder.head0.conv" + std::to_string(l);
        const std::string b = "encoder.head1.conv" + std::to_string(l);
        store.get(b + ".kernel")->v = store.get(a + ".kernel")->v;
        store.get(b + ".bias")->v = store.get(a + ".bias")->v;
    }
    Var w = store.get("encoder.combine.w"); // [6, 6]
    w->v.assign(w->size(), 0.0);
    for (std::size_t i = 0; i < 6; ++i) w->v[i * 6 + i] = 1.0; // identity: plain concat
    store.get("encoder.combine.b")->v.assign(6, 0.0);

    Rng rng(14);
    Var x = leaf_matrix(10, 1, rng);
    Tape tape;
    const auto y = enc.forward(tape, x).values;
    for (std::size_t t = 0; t < 10; ++t) {
        for (std::size_t c = 0; c < 3; ++c) {
            CHECK(y->v[t * 6 + c] == y->v[t * 6 + 3 + c]);
        }
    }

    // Independent init: heads differ.
    randomize(store, 15);
    Tape t2;
    const auto y2 = enc.forward(t2, x).values;
    bool any_diff = false;
    for (std::size_t i = 0; i < y2->size() && !any_diff; ++i) {
        any_diff = y2->v[i] != y->v[i];
    }
    CHECK(any_diff);
}

TEST_CASE("moment gate: zero final layer gives uniform weights that sum to one") {
    EncoderConfig cfg;
    cfg.heads = 4;
    cfg.gate_hidden = 5;
    ParamStore store;
    MomentGate gate(cfg, store, "gate");
    Rng rng(16);
    // Hidden layer random, final layer zero (as registered).
    ParamStore::init_xavier(store.get("gate.w1"), rng);

    Tape tape;
    const std::vector<double> history = {0.0, 3.0, 1.0, 0.0, 7.0, 2.0};
    Var w = gate.forward(tape, history);
    for (double v : w->v) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));

    // Random final layer: weights still sum to 1.
    randomize(store, 17);
    Tape t2;
    Var w2 = gate.forward(t2, history);
    double sum = 0.0;
    for (double v : w2->v) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(gate.forward(t2, std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("gated encoder differentiates through gate and heads") {
    EncoderConfig cfg;
    cfg.heads = 2;
    cfg.hidden_channels = 2;
    cfg.dilations = {1, 2};
    cfg.combine_width = 3;
    cfg.gating = GatingMode::MomentGated;
    cfg.gate_hidden = 3;

    ParamStore store;
    MultiHeadEncoder enc(cfg, 1, store, "encoder");
    MomentGate gate(cfg, store, "gate");
    randomize(store, 18);

    Rng rng(19);
    Var x = leaf_matrix(8, 1, rng);
    const std::vector<double> history = {1.0, 0.0, 2.0, 5.0, 1.0, 0.0, 3.0, 2.0};
    auto build = [&](Tape& t) {
        Var g = gate.forward(t, history);
        const Encoding e = enc.forward(t, x, &g);
        return sum_all(t, tanh_op(t, e.values));
    };
    CHECK(grad_check(build, store.tensors()) < 1e-6);
}
