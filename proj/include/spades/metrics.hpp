#pragma once

#include "spades/series.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace spades {

/// Quantile (pinball) loss q*(y - yhat)_+ + (1-q)*(yhat - y)_+.
double quantile_loss(double y, double yhat, double q);

/// One evaluated forecast point: actual and per-quantile predictions for
/// a (series, fcd, horizon) triple, tagged with the magnitude category of
/// the series at that fcd.
struct EvalPoint {
    std::size_t series = 0;
    long long fcd = 0;
    HorizonPair horizon;
    MagnitudeCategory category = MagnitudeCategory::Zero;
    double actual = 0.0;
    std::vector<double> forecast; // aligned with the quantile set
};

/// Per-(series,fcd,horizon,quantile) forecasts with the non-crossing
/// guarantee. Quantiles are shared across all points.
struct QuantileForecast {
    std::vector<double> quantiles;  // sorted, in (0,1)
    std::vector<EvalPoint> points;

    void validate() const; // monotone in q, non-negative, quantiles sorted
};

using PointFilter = std::function<bool(const EvalPoint&)>;

/// Sum QL / sum y over the selection; nullopt when the denominator is
/// zero (undefined metric, never a crash). Sums use the deterministic
/// chunked reduction so reports are reproducible.
std::optional<double> wql(const QuantileForecast& fc, double q, const PointFilter& filter = {});

/// One-sided error masses over the selection:
/// ob = sum (yhat - y)_+ and ub = sum (y - yhat)_+, so that
/// ql == q * ub + (1 - q) * ob for the same aggregation set.
struct BiasMasses {
    double ob = 0.0;
    double ub = 0.0;
};
BiasMasses bias_decomposition(const QuantileForecast& fc, double q,
                              const PointFilter& filter = {});

/// One row of a category report.
struct BiasReport {
    std::string category;  // a MagnitudeCategory name or "All"
    double quantile = 0.0;
    double ql = 0.0;
    double ob = 0.0;
    double ub = 0.0;
    double actual_sum = 0.0;            // denominator, reported so either
                                        // ob/ub normalization is recoverable
    std::optional<double> wql;          // absent when actual_sum == 0
    std::optional<double> delta_vs_baseline_pct;
};

/// One BiasReport per (category present, quantile) plus an "All" row per
/// quantile. When a baseline is given, deltas are (wql/base - 1) * 100.
std::vector<BiasReport> report_by_category(const QuantileForecast& fc,
                                           const std::vector<BiasReport>* baseline = nullptr);

std::string report_to_csv(const std::vector<BiasReport>& report);
std::string report_to_json(const std::vector<BiasReport>& report);
std::vector<BiasReport> report_from_csv(const std::string& path);

/// Loss families for the magnitude-bias factorization audit.
enum class AuditLoss { Pinball, Mse, CrpsNormal };

/// Audit of the factorization ell(y, yhat) = g(y) f(r): builds
/// yhat = (1+r) y pointwise, evaluates the loss per series and compares
/// realized per-series loss shares against the predicted weight shares
/// w_i ∝ sum g(y). g is y for pinball and CRPS (sigma = kappa*y), y^2 for
/// MSE.
struct FactorizedLoss {
    std::string g_tag;                   // "identity" | "square"
    AuditLoss loss = AuditLoss::Pinball;
    std::vector<double> series_loss;     // realized per-series totals
    std::vector<double> predicted_weight; // sum g(y) per series
    double max_share_deviation = 0.0;    // max relative gap between shares
};

FactorizedLoss loss_weight_audit(const std::vector<std::vector<double>>& series_targets,
                                 double r, AuditLoss loss, double q = 0.9,
                                 double kappa = 0.1);

/// Closed-form CRPS of a normal predictive N(mean, sd^2) at outcome y.
double crps_normal(double y, double mean, double sd);

} // namespace spades
