#include "spades/numeric.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace spades {

namespace {

double sum_block(std::span<const double> values) {
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc;
}

// Combine block sums pairwise until one value remains. In-place halving
// keeps the combination order fixed for a given block count.
double combine_pairwise(std::vector<double>& sums) {
    if (sums.empty()) return 0.0;
    std::size_t n = sums.size();
    while (n > 1) {
        const std::size_t half = n / 2;
        for (std::size_t i = 0; i < half; ++i) {
            sums[i] = sums[2 * i] + sums[2 * i + 1];
        }
        if (n % 2 == 1) {
            sums[half] = sums[n - 1];
            n = half + 1;
        } else {
            n = half;
        }
    }
    return sums[0];
}

} // namespace

double pairwise_sum(std::span<const double> values) {
    if (values.size() <= kSumBlock) return sum_block(values);
    const std::size_t blocks = (values.size() + kSumBlock - 1) / kSumBlock;
    std::vector<double> sums(blocks);
    for (std::size_t b = 0; b < blocks; ++b) {
        const std::size_t lo = b * kSumBlock;
        const std::size_t hi = std::min(lo + kSumBlock, values.size());
        sums[b] = sum_block(values.subspan(lo, hi - lo));
    }
    return combine_pairwise(sums);
}

double pairwise_sum_parallel(std::span<const double> values) {
    if (values.size() <= kSumBlock) return sum_block(values);
    const std::size_t blocks = (values.size() + kSumBlock - 1) / kSumBlock;
    std::vector<double> sums(blocks);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(blocks); ++b) {
        const std::size_t lo = static_cast<std::size_t>(b) * kSumBlock;
        const std::size_t hi = std::min(lo + kSumBlock, values.size());
        sums[static_cast<std::size_t>(b)] = sum_block(values.subspan(lo, hi - lo));
    }
    return combine_pairwise(sums);
}

double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double normal_icdf(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::invalid_argument("normal_icdf: p must lie in (0,1)");
    }

    // Acklam's piecewise rational approximation.
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    static constexpr double p_low = 0.02425;

    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    // One Halley refinement against erfc brings the result to ~1 ulp.
    const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    x = x - u / (1.0 + 0.5 * x * u);
    return x;
}

double softplus(double x) {
    if (x > 30.0) return x;
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

double softplus_grad(double x) {
    if (x > 30.0) return 1.0;
    if (x < -30.0) return std::exp(x);
    return 1.0 / (1.0 + std::exp(-x));
}

} // namespace spades
