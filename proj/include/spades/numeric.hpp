#pragma once

#include <cstddef>
#include <span>

namespace spades {

// Deterministic reduction. Values are summed in fixed blocks of
// kSumBlock elements (serially within each block) and the block sums are
// combined pairwise. The result is a pure function of the input order —
// independent of thread count — so serial and OpenMP paths agree bitwise.
inline constexpr std::size_t kSumBlock = 1024;

double pairwise_sum(std::span<const double> values);

// OpenMP version of the same reduction; bit-identical to pairwise_sum.
double pairwise_sum_parallel(std::span<const double> values);

// Standard normal pdf/cdf.
double normal_pdf(double x);
double normal_cdf(double x);

// Inverse standard normal CDF (probit), Phi^{-1}(p) for p in (0,1).
// Acklam's rational approximation refined with one Halley step; accurate
// to full double precision away from the extreme tails.
double normal_icdf(double p);

// Numerically stable log(1 + exp(x)).
double softplus(double x);
double softplus_grad(double x); // logistic sigmoid

} // namespace spades
