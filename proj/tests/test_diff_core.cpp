#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "spades/adam.hpp"
#include "spades/rng.hpp"
#include "spades/tape.hpp"

#include <cmath>

using namespace spades;

namespace {

Var random_tensor(std::vector<std::size_t> shape, Rng& rng, double scale = 1.0) {
    Tensor t(std::move(shape));
    for (auto& v : t.v) v = rng.uniform(-scale, scale);
    return make_var(std::move(t));
}

} // namespace

TEST_CASE("linear with identity weights is the identity") {
    Tape tape;
    Var x = make_var(Tensor::from({3}, {1.5, -2.0, 0.25}));
    Tensor w({3, 3});
    for (std::size_t i = 0; i < 3; ++i) w(i, i) = 1.0;
    Var W = make_var(std::move(w));
    Var b = make_var(Tensor({3}));
    Var y = linear(tape, x, W, b);
    CHECK(y->v == x->v);
}

TEST_CASE("gradient of sum(linear) wrt bias is all ones") {
    Tape tape;
    Rng rng(1);
    Var x = random_tensor({4, 3}, rng);
    Var W = random_tensor({3, 2}, rng);
    Var b = random_tensor({2}, rng);
    Var s = sum_all(tape, linear(tape, x, W, b));
    tape.backward(s);
    for (double g : b->g) CHECK(g == doctest::Approx(4.0)); // one per row
    CHECK_THROWS_AS(linear(tape, random_tensor({5}, rng), W, b), std::invalid_argument);
}

TEST_CASE("linear passes the finite-difference oracle") {
    Rng rng(2);
    for (int rep = 0; rep < 5; ++rep) {
        Var x = random_tensor({3, 4}, rng);
        Var W = random_tensor({4, 2}, rng);
        Var b = random_tensor({2}, rng);
        auto build = [&](Tape& t) { return sum_all(t, tanh_op(t, linear(t, x, W, b))); };
        CHECK(grad_check(build, {x, W, b}) < 1e-6);
    }
}

TEST_CASE("width-1 kernel with unit weight is the identity convolution") {
    Tape tape;
    Rng rng(3);
    Var x = random_tensor({10, 2}, rng);
    Tensor k({1, 2, 2});
    k(0, 0, 0) = 1.0;
    k(0, 1, 1) = 1.0;
    Var kernel = make_var(std::move(k));
    Var bias = make_var(Tensor({2}));
    Var y = dilated_causal_conv(tape, x, kernel, bias, 1);
    CHECK(y->v == x->v);
}

TEST_CASE("convolution output is causal") {
    Rng rng(4);
    Var kernel = random_tensor({2, 1, 1}, rng);
    Var bias = random_tensor({1}, rng);
    Tensor base({12, 1});
    for (auto& v : base.v) v = rng.uniform(-1.0, 1.0);

    Tape t1;
    Var x1 = make_var(base);
    Var y1 = dilated_causal_conv(t1, x1, kernel, bias, 2);

    Tensor bumped = base;
    bumped(7, 0) += 5.0; // perturb time 7
    Tape t2;
    Var x2 = make_var(std::move(bumped));
    Var y2 = dilated_causal_conv(t2, x2, kernel, bias, 2);

    for (std::size_t t = 0; t < 7; ++t) CHECK(y1->v[t] == y2->v[t]);
    CHECK(y1->v[7] != y2->v[7]);
}

TEST_CASE("stacked dilations 1,2,4 give receptive field 8") {
    Rng rng(5);
    std::vector<Var> kernels, biases;
    for (int l = 0; l < 3; ++l) {
        kernels.push_back(random_tensor({2, 1, 1}, rng));
        biases.push_back(random_tensor({1}, rng));
    }
    auto run_stack = [&](const Tensor& input) {
        Tape t;
        Var h = make_var(input);
        const std::size_t dil[] = {1, 2, 4};
        for (int l = 0; l < 3; ++l) h = dilated_causal_conv(t, h, kernels[l], biases[l], dil[l]);
        return h->v;
    };
    Tensor base({20, 1});
    for (auto& v : base.v) v = rng.uniform(-1.0, 1.0);
    const auto y0 = run_stack(base);

    // Impulse at t-8 and earlier must not reach the output at t=19.
    for (std::size_t t : {11u, 8u, 3u}) {
        Tensor bumped = base;
        bumped(t, 0) += 3.0;
        const auto y = run_stack(bumped);
        CHECK(y[19] == y0[19]);
    }
    // Impulse inside the field does reach it.
    Tensor inside = base;
    inside(13, 0) += 3.0;
    CHECK(run_stack(inside)[19] != y0[19]);

    CHECK(left_pad_mask(20, 8) ==
          std::vector<bool>{true, true, true, true, true, true, true, false, false, false,
                            false, false, false, false, false, false, false, false, false, false});
}

TEST_CASE("dilated conv passes the finite-difference oracle") {
    Rng rng(6);
    for (int rep = 0; rep < 5; ++rep) {
        Var x = random_tensor({9, 2}, rng);
        Var kernel = random_tensor({2, 2, 3}, rng);
        Var bias = random_tensor({3}, rng);
        auto build = [&](Tape& t) {
            return sum_all(t, tanh_op(t, dilated_causal_conv(t, x, kernel, bias, 2)));
        };
        CHECK(grad_check(build, {x, kernel, bias}) < 1e-6);
    }
}

TEST_CASE("mlp building blocks") {
    // Zero weights, zero bias, identity path: zero output.
    Tape tape;
    Var x = make_var(Tensor::from({3}, {1.0, 2.0, 3.0}));
    Var W = make_var(Tensor({3, 2}));
    Var b = make_var(Tensor({2}));
    Var y = linear(tape, x, W, b);
    CHECK(y->v == std::vector<double>{0.0, 0.0});

    // A single layer is the linear op itself (already the same function);
    // the composite with softplus matches finite differences.
    Rng rng(7);
    Var w1 = random_tensor({3, 5}, rng);
    Var b1 = random_tensor({5}, rng);
    Var w2 = random_tensor({5, 2}, rng);
    Var b2 = random_tensor({2}, rng);
    auto build = [&](Tape& t) {
        Var h = tanh_op(t, linear(t, x, w1, b1));
        return sum_all(t, softplus_op(t, linear(t, h, w2, b2)));
    };
    CHECK(grad_check(build, {w1, b1, w2, b2}) < 1e-6);
}

TEST_CASE("softmax sums to one and differentiates correctly") {
    Rng rng(8);
    Var x = random_tensor({6}, rng, 2.0);
    Tape tape;
    Var y = softmax_vec(tape, x);
    double sum = 0.0;
    for (double v : y->v) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

    Var probe = random_tensor({6}, rng);
    auto build = [&](Tape& t) {
        // Weighted sum keeps the check sensitive to off-diagonal terms.
        Var s = softmax_vec(t, x);
        Var w = linear(t, s, make_var(Tensor::from({6, 1}, probe->v)), make_var(Tensor({1})));
        return sum_all(t, w);
    };
    CHECK(grad_check(build, {x}) < 1e-6);
}

TEST_CASE("monotone quantile head is positive and non-crossing") {
    Rng rng(9);
    for (int rep = 0; rep < 20; ++rep) {
        Var raw = random_tensor({4}, rng, 3.0);
        Tape tape;
        Var y = monotone_quantile_head(tape, raw);
        CHECK(y->v[0] > 0.0);
        for (std::size_t i = 1; i < 4; ++i) CHECK(y->v[i] > y->v[i - 1]);
    }
    Var raw = random_tensor({4}, rng, 2.0);
    auto build = [&](Tape& t) { return sum_all(t, monotone_quantile_head(t, raw)); };
    CHECK(grad_check(build, {raw}) < 1e-6);
}

TEST_CASE("pinball loss matrix: values, span normalization and subgradient") {
    Var preds = make_var(Tensor::from({2, 2}, {8.0, 12.0, 4.0, 6.0}));
    const std::vector<double> actuals = {10.0, 2.0};
    const std::vector<double> spans = {1.0, 2.0};
    const std::vector<double> quantiles = {0.5, 0.9};
    Tape tape;
    Var loss = pinball_loss_matrix(tape, preds, actuals, spans, quantiles, 1.0);
    // Hand computation: h0: y=10: QL(10,8;.5)=1, QL(10,12;.9)=.2
    //                   h1 (span 2): y'=1, f'={2,3}: QL=.5, QL=.2
    CHECK(loss->v[0] == doctest::Approx(1.0 + 0.2 + 0.5 + 0.2).epsilon(1e-12));
    tape.backward(loss);
    // d/df for f'>y' is (1-q)/span; for f'<y' is -q/span.
    CHECK(preds->g[0] == doctest::Approx(-0.5));
    CHECK(preds->g[1] == doctest::Approx(0.1));
    CHECK(preds->g[2] == doctest::Approx(0.25));
    CHECK(preds->g[3] == doctest::Approx(0.05));
}

TEST_CASE("adam: bias-corrected first step moves by about lr") {
    Var p = make_var(Tensor::from({2}, {1.0, -3.0}));
    p->ensure_grad();
    Adam adam({p}, {0.1, 0.9, 0.999, 1e-8});
    p->g = {0.5, -2.0}; // constant gradient
    adam.step();
    CHECK(p->v[0] == doctest::Approx(1.0 - 0.1).epsilon(1e-6));
    CHECK(p->v[1] == doctest::Approx(-3.0 + 0.1).epsilon(1e-6));
}

TEST_CASE("adam: zero gradient and zero lr leave parameters unchanged") {
    Var p = make_var(Tensor::from({2}, {1.0, 2.0}));
    p->ensure_grad();
    Adam adam({p}, {0.1, 0.9, 0.999, 1e-8});
    adam.step();
    CHECK(p->v == std::vector<double>{1.0, 2.0});

    Var q = make_var(Tensor::from({2}, {1.0, 2.0}));
    q->ensure_grad();
    Adam frozen({q}, {0.0, 0.9, 0.999, 1e-8});
    q->g = {5.0, -1.0};
    frozen.step();
    CHECK(q->v == std::vector<double>{1.0, 2.0});
}

TEST_CASE("adam is deterministic and rejects non-finite gradients") {
    auto run = [] {
        Var p = make_var(Tensor::from({3}, {0.3, -0.2, 0.9}));
        p->ensure_grad();
        Adam adam({p}, {0.05, 0.9, 0.999, 1e-8});
        for (int i = 0; i < 10; ++i) {
            for (std::size_t j = 0; j < 3; ++j) p->g[j] = 0.1 * static_cast<double>(j + 1);
            adam.step();
            adam.zero_grad();
        }
        return p->v;
    };
    CHECK(run() == run());

    Var p = make_var(Tensor::from({1}, {1.0}));
    p->ensure_grad();
    Adam adam({p}, {0.1, 0.9, 0.999, 1e-8});
    p->g[0] = std::nan("");
    CHECK_THROWS_AS(adam.step(), training_divergence_error);
}

TEST_CASE("grad_check on the quadratic |w|^2 is near machine precision") {
    Rng rng(10);
    Var w = random_tensor({6}, rng);
    auto build = [&](Tape& t) { return sum_all(t, square_op(t, w)); };
    CHECK(grad_check(build, {w}) < 1e-8);
}

TEST_CASE("quantile loss tie sits on the forecast >= actual branch") {
    Var preds = make_var(Tensor::from({1, 1}, {5.0}));
    Tape tape;
    Var loss = pinball_loss_matrix(tape, preds, {5.0}, {1.0}, {0.9}, 1.0);
    tape.backward(loss);
    CHECK(loss->v[0] == 0.0);
    CHECK(preds->g[0] == doctest::Approx(0.1)); // (1 - q), not -q
}
