#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "windcast/errors.hpp"
#include "windcast/time_series.hpp"

namespace windcast {

/// Fit statistics for one (model, horizon) pair. msre is absent whenever an
/// observed value is exactly zero.
struct MetricReport {
	std::size_t n = 0;
	double r = 0.0;
	double mse = 0.0;
	std::optional<double> msre;
	double ce = 0.0;
	double r_squared = 0.0;
};

namespace detail {

inline void require_same_length(std::span<const double> observed,
                                std::span<const double> predicted,
                                std::size_t min_len) {
	if (observed.size() != predicted.size())
		throw SizeMismatch("observed and predicted lengths differ (" +
		                   std::to_string(observed.size()) + " vs " +
		                   std::to_string(predicted.size()) + ")");
	if (observed.size() < min_len)
		throw SizeMismatch("need at least " + std::to_string(min_len) + " samples");
}

inline double mean_of(std::span<const double> xs) {
	double sum = 0.0;
	for (double x : xs) sum += x;
	return sum / static_cast<double>(xs.size());
}

} // namespace detail

/// Pearson correlation of observed against predicted.
inline double correlation_r(std::span<const double> observed,
                            std::span<const double> predicted) {
	detail::require_same_length(observed, predicted, 2);
	const double obs_mean = detail::mean_of(observed);
	const double pred_mean = detail::mean_of(predicted);
	double soo = 0.0, spp = 0.0, sop = 0.0;
	for (std::size_t i = 0; i < observed.size(); ++i) {
		const double d_obs = observed[i] - obs_mean;
		const double d_pred = predicted[i] - pred_mean;
		soo += d_obs * d_obs;
		spp += d_pred * d_pred;
		sop += d_obs * d_pred;
	}
	if (soo == 0.0 || spp == 0.0)
		throw UndefinedCorrelation("correlation is undefined for a constant sequence");
	return sop / std::sqrt(soo * spp);
}

inline double mse(std::span<const double> observed, std::span<const double> predicted) {
	detail::require_same_length(observed, predicted, 1);
	double sse = 0.0;
	for (std::size_t i = 0; i < observed.size(); ++i) {
		const double e = observed[i] - predicted[i];
		sse += e * e;
	}
	return sse / static_cast<double>(observed.size());
}

struct AuxiliaryMetrics {
	std::optional<double> msre;
	double ce = 0.0;
	double r_squared = 0.0;
};

/// MSRE, coefficient of efficiency (Nash-Sutcliffe) and r^2. MSRE is marked
/// absent instead of dividing by a zero observation.
inline AuxiliaryMetrics auxiliary_metrics(std::span<const double> observed,
                                          std::span<const double> predicted) {
	detail::require_same_length(observed, predicted, 2);
	AuxiliaryMetrics aux;

	bool msre_defined = true;
	double rel_sse = 0.0;
	for (std::size_t i = 0; i < observed.size(); ++i) {
		if (observed[i] == 0.0) { msre_defined = false; break; }
		const double rel = (observed[i] - predicted[i]) / observed[i];
		rel_sse += rel * rel;
	}
	if (msre_defined)
		aux.msre = rel_sse / static_cast<double>(observed.size());

	const double obs_mean = detail::mean_of(observed);
	double sse = 0.0, variance_sum = 0.0;
	for (std::size_t i = 0; i < observed.size(); ++i) {
		const double e = observed[i] - predicted[i];
		sse += e * e;
		const double d = observed[i] - obs_mean;
		variance_sum += d * d;
	}
	if (variance_sum == 0.0)
		throw UndefinedCorrelation("CE is undefined for a constant observed sequence");
	aux.ce = 1.0 - sse / variance_sum;

	const double r = correlation_r(observed, predicted);
	aux.r_squared = r * r;
	return aux;
}

/// Full report for one (observed, predicted) pair.
inline MetricReport evaluate_predictions(std::span<const double> observed,
                                         std::span<const double> predicted) {
	MetricReport report;
	report.n = observed.size();
	report.r = correlation_r(observed, predicted);
	report.mse = mse(observed, predicted);
	const AuxiliaryMetrics aux = auxiliary_metrics(observed, predicted);
	report.msre = aux.msre;
	report.ce = aux.ce;
	report.r_squared = aux.r_squared;
	return report;
}

struct PredictionPairs {
	std::vector<double> observed;
	std::vector<double> predicted;
};

/// No-skill reference: the prediction for t + p is the value observed at t.
inline PredictionPairs persistence_baseline(const TimeSeries& series, int horizon_steps) {
	if (horizon_steps < 1)
		throw ConfigError("horizon_steps must be at least 1");
	const std::size_t n = series.size();
	if (n <= static_cast<std::size_t>(horizon_steps))
		throw SeriesTooShort("series of length " + std::to_string(n) +
		                     " has no persistence pairs at horizon " +
		                     std::to_string(horizon_steps));
	PredictionPairs pairs;
	const std::size_t count = n - static_cast<std::size_t>(horizon_steps);
	pairs.observed.assign(series.values.begin() + horizon_steps, series.values.end());
	pairs.predicted.assign(series.values.begin(), series.values.begin() + static_cast<std::ptrdiff_t>(count));
	return pairs;
}

struct ComparisonEntry {
	std::string label;
	MetricReport report;
};

/// Ranks entries by ascending MSE, breaking ties by descending r; the sort is
/// stable beyond that.
inline std::vector<ComparisonEntry> compare_report(std::vector<ComparisonEntry> entries) {
	if (entries.empty())
		throw ConfigError("comparison needs at least one entry");
	std::stable_sort(entries.begin(), entries.end(),
	                 [](const ComparisonEntry& a, const ComparisonEntry& b) {
		                 if (a.report.mse != b.report.mse) return a.report.mse < b.report.mse;
		                 return a.report.r > b.report.r;
	                 });
	return entries;
}

} // namespace windcast
