#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "spades/numeric.hpp"
#include "spades/rng.hpp"

#include <cmath>
#include <vector>

using namespace spades;

namespace {

// Bisection inversion of the standard normal CDF; independent oracle for
// normal_icdf.
double probit_bisect(double p) {
    double lo = -10.0, hi = 10.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (normal_cdf(mid) < p) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

TEST_CASE("pairwise sum matches naive summation closely") {
    Rng rng(1);
    std::vector<double> v(50000);
    long double naive = 0.0;
    for (auto& x : v) {
        x = rng.uniform(-1.0, 1.0);
        naive += x;
    }
    const double s = pairwise_sum(v);
    CHECK(std::abs(s - static_cast<double>(naive)) < 1e-9);
}

TEST_CASE("parallel reduction is bitwise identical to the serial reference") {
    Rng rng(2);
    for (std::size_t n : {0, 1, 7, 1023, 1024, 1025, 100000, 1 << 20}) {
        std::vector<double> v(n);
        for (auto& x : v) x = rng.normal() * 1e3;
        CHECK(pairwise_sum(v) == pairwise_sum_parallel(v));
    }
}

TEST_CASE("normal cdf basics") {
    CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
    CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
    CHECK(normal_pdf(0.0) == doctest::Approx(0.3989422804014327));
}

TEST_CASE("normal_icdf agrees with the bisection oracle") {
    for (double p = 0.001; p < 0.9995; p += 0.013) {
        CHECK(std::abs(normal_icdf(p) - probit_bisect(p)) < 1e-10);
    }
    CHECK(normal_icdf(0.5) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(normal_icdf(0.9) == doctest::Approx(1.2815515655446004).epsilon(1e-12));
    CHECK_THROWS_AS(normal_icdf(0.0), std::invalid_argument);
    CHECK_THROWS_AS(normal_icdf(1.0), std::invalid_argument);
}

TEST_CASE("softplus stays stable at extremes") {
    CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)));
    CHECK(softplus(100.0) == doctest::Approx(100.0));
    CHECK(softplus(-100.0) == doctest::Approx(0.0).epsilon(1e-30));
    CHECK(softplus_grad(0.0) == doctest::Approx(0.5));
}

TEST_CASE("rng poisson mean is close to the rate") {
    Rng rng(3);
    for (double rate : {0.3, 5.0, 120.0}) {
        double sum = 0.0;
        const int n = 20000;
        for (int i = 0; i < n; ++i) sum += static_cast<double>(rng.poisson(rate));
        CHECK(sum / n == doctest::Approx(rate).epsilon(0.05));
    }
}

TEST_CASE("rng is deterministic per seed and forks are independent") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c(42);
    Rng f1 = c.fork(1);
    Rng c2(42);
    Rng f1b = c2.fork(1);
    CHECK(f1.next_u64() == f1b.next_u64());
}

TEST_CASE("sample_without_replacement yields k distinct sorted indices") {
    Rng rng(9);
    const auto idx = rng.sample_without_replacement(50, 20);
    REQUIRE(idx.size() == 20);
    for (std::size_t i = 1; i < idx.size(); ++i) CHECK(idx[i] > idx[i - 1]);
    CHECK(idx.back() < 50);
}
