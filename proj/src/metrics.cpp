#include "spades/metrics.hpp"

#include "spades/csv.hpp"
#include "spades/numeric.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace spades {

double quantile_loss(double y, double yhat, double q) {
    if (!(q > 0.0 && q < 1.0)) {
        throw std::invalid_argument("quantile_loss: q must lie in (0,1)");
    }
    return q * std::max(y - yhat, 0.0) + (1.0 - q) * std::max(yhat - y, 0.0);
}

void QuantileForecast::validate() const {
    if (!std::is_sorted(quantiles.begin(), quantiles.end())) {
        throw std::invalid_argument("forecast: quantiles must be sorted");
    }
    for (double q : quantiles) {
        if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("forecast: quantile outside (0,1)");
    }
    for (const auto& p : points) {
        if (p.forecast.size() != quantiles.size()) {
            throw std::invalid_argument("forecast: point arity mismatch");
        }
        double prev = -1.0;
        for (double v : p.forecast) {
            if (v < 0.0) throw std::invalid_argument("forecast: negative quantile value");
            if (v < prev) throw std::invalid_argument("forecast: quantile crossing");
            prev = v;
        }
    }
}

namespace {

std::size_t quantile_index(const QuantileForecast& fc, double q) {
    for (std::size_t i = 0; i < fc.quantiles.size(); ++i) {
        if (fc.quantiles[i] == q) return i;
    }
    throw std::invalid_argument("requested quantile not present in forecast");
}

// Gather per-point values in point order; reductions stay deterministic.
template <typename F>
std::vector<double> collect(const QuantileForecast& fc, const PointFilter& filter, F&& f) {
    std::vector<double> vals;
    vals.reserve(fc.points.size());
    for (const auto& p : fc.points) {
        if (filter && !filter(p)) continue;
        vals.push_back(f(p));
    }
    return vals;
}

} // namespace

std::optional<double> wql(const QuantileForecast& fc, double q, const PointFilter& filter) {
    const std::size_t qi = quantile_index(fc, q);
    const auto losses = collect(fc, filter,
                                [&](const EvalPoint& p) { return quantile_loss(p.actual, p.forecast[qi], q); });
    const auto actuals = collect(fc, filter, [](const EvalPoint& p) { return p.actual; });
    const double denom = pairwise_sum_parallel(actuals);
    if (denom <= 0.0) return std::nullopt;
    return pairwise_sum_parallel(losses) / denom;
}

BiasMasses bias_decomposition(const QuantileForecast& fc, double q, const PointFilter& filter) {
    const std::size_t qi = quantile_index(fc, q);
    const auto over = collect(fc, filter, [&](const EvalPoint& p) {
        return std::max(p.forecast[qi] - p.actual, 0.0);
    });
    const auto under = collect(fc, filter, [&](const EvalPoint& p) {
        return std::max(p.actual - p.forecast[qi], 0.0);
    });
    return {pairwise_sum_parallel(over), pairwise_sum_parallel(under)};
}

std::vector<BiasReport> report_by_category(const QuantileForecast& fc,
                                           const std::vector<BiasReport>* baseline) {
    fc.validate();
    static constexpr MagnitudeCategory kOrder[] = {
        MagnitudeCategory::SuperFast, MagnitudeCategory::Fast,  MagnitudeCategory::Medium,
        MagnitudeCategory::Slow,      MagnitudeCategory::SuperSlow, MagnitudeCategory::Zero};

    std::vector<BiasReport> rows;
    auto emit = [&](const std::string& name, const PointFilter& filter) {
        for (double q : fc.quantiles) {
            BiasReport row;
            row.category = name;
            row.quantile = q;
            const auto masses = bias_decomposition(fc, q, filter);
            row.ob = masses.ob;
            row.ub = masses.ub;
            row.ql = q * masses.ub + (1.0 - q) * masses.ob;
            const auto actuals = collect(fc, filter, [](const EvalPoint& p) { return p.actual; });
            row.actual_sum = pairwise_sum_parallel(actuals);
            if (row.actual_sum > 0.0) row.wql = row.ql / row.actual_sum;
            rows.push_back(std::move(row));
        }
    };

    emit("All", {});
    for (MagnitudeCategory c : kOrder) {
        const bool present = std::any_of(fc.points.begin(), fc.points.end(),
                                         [&](const EvalPoint& p) { return p.category == c; });
        if (!present) continue;
        emit(category_name(c), [c](const EvalPoint& p) { return p.category == c; });
    }

    if (baseline) {
        for (auto& row : rows) {
            for (const auto& base : *baseline) {
                if (base.category == row.category && base.quantile == row.quantile) {
                    if (row.wql && base.wql && *base.wql > 0.0) {
                        row.delta_vs_baseline_pct = (*row.wql / *base.wql - 1.0) * 100.0;
                    }
                    break;
                }
            }
        }
    }
    return rows;
}

std::string report_to_csv(const std::vector<BiasReport>& report) {
    std::ostringstream out;
    out << "category,quantile,ql,ob,ub,wql,delta_vs_baseline_pct\n";
    for (const auto& r : report) {
        out << r.category << ',' << format_double(r.quantile) << ',' << format_double(r.ql) << ','
            << format_double(r.ob) << ',' << format_double(r.ub) << ',' << format_optional(r.wql)
            << ',' << format_optional(r.delta_vs_baseline_pct) << "\n";
    }
    return out.str();
}

std::string report_to_json(const std::vector<BiasReport>& report) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : report) {
        nlohmann::json row;
        row["category"] = r.category;
        row["quantile"] = r.quantile;
        row["ql"] = r.ql;
        row["ob"] = r.ob;
        row["ub"] = r.ub;
        row["wql"] = r.wql ? nlohmann::json(*r.wql) : nlohmann::json();
        row["delta_vs_baseline_pct"] =
            r.delta_vs_baseline_pct ? nlohmann::json(*r.delta_vs_baseline_pct) : nlohmann::json();
        arr.push_back(std::move(row));
    }
    return arr.dump(2) + "\n";
}

std::vector<BiasReport> report_from_csv(const std::string& path) {
    const CsvTable t = read_csv(path);
    const std::size_t c_cat = t.column("category");
    const std::size_t c_q = t.column("quantile");
    const std::size_t c_ql = t.column("ql");
    const std::size_t c_ob = t.column("ob");
    const std::size_t c_ub = t.column("ub");
    const std::size_t c_wql = t.column("wql");
    const std::size_t c_delta = t.column("delta_vs_baseline_pct");
    std::vector<BiasReport> out;
    for (const auto& row : t.rows) {
        BiasReport r;
        r.category = row[c_cat];
        r.quantile = parse_double(row[c_q]);
        r.ql = parse_double(row[c_ql]);
        r.ob = parse_double(row[c_ob]);
        r.ub = parse_double(row[c_ub]);
        if (!row[c_wql].empty()) r.wql = parse_double(row[c_wql]);
        if (!row[c_delta].empty()) r.delta_vs_baseline_pct = parse_double(row[c_delta]);
        out.push_back(std::move(r));
    }
    return out;
}

double crps_normal(double y, double mean, double sd) {
    if (sd <= 0.0) throw std::invalid_argument("crps_normal: sd must be positive");
    const double z = (y - mean) / sd;
    return sd * (z * (2.0 * normal_cdf(z) - 1.0) + 2.0 * normal_pdf(z) -
                 1.0 / std::sqrt(std::numbers::pi));
}

FactorizedLoss loss_weight_audit(const std::vector<std::vector<double>>& series_targets,
                                 double r, AuditLoss loss, double q, double kappa) {
    if (series_targets.empty()) throw std::invalid_argument("loss_weight_audit: no series");
    if (r == 0.0) throw std::invalid_argument("loss_weight_audit: r must be nonzero");

    FactorizedLoss out;
    out.loss = loss;
    out.g_tag = (loss == AuditLoss::Mse) ? "square" : "identity";
    out.series_loss.reserve(series_targets.size());
    out.predicted_weight.reserve(series_targets.size());

    for (const auto& series : series_targets) {
        if (series.empty()) throw std::invalid_argument("loss_weight_audit: empty series");
        double total_loss = 0.0;
        double weight = 0.0;
        for (double y : series) {
            if (y <= 0.0) {
                throw std::invalid_argument(
                    "loss_weight_audit: targets must be positive (relative error undefined)");
            }
            const double yhat = (1.0 + r) * y;
            switch (loss) {
                case AuditLoss::Pinball:
                    total_loss += quantile_loss(y, yhat, q);
                    weight += y;
                    break;
                case AuditLoss::Mse:
                    total_loss += (yhat - y) * (yhat - y);
                    weight += y * y;
                    break;
                case AuditLoss::CrpsNormal:
                    total_loss += crps_normal(y, yhat, kappa * y);
                    weight += y;
                    break;
            }
        }
        out.series_loss.push_back(total_loss);
        out.predicted_weight.push_back(weight);
    }

    const double loss_total = pairwise_sum(out.series_loss);
    const double weight_total = pairwise_sum(out.predicted_weight);
    double max_dev = 0.0;
    for (std::size_t i = 0; i < out.series_loss.size(); ++i) {
        const double ls = out.series_loss[i] / loss_total;
        const double ws = out.predicted_weight[i] / weight_total;
        max_dev = std::max(max_dev, std::abs(ls - ws) / std::max(ws, 1e-300));
    }
    out.max_share_deviation = max_dev;
    return out;
}

} // namespace spades
