#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "windcast/errors.hpp"

namespace windcast {

/// Sampling interval of the reference three-hourly buoy record.
inline constexpr std::int64_t kDefaultStepSeconds = 10800;

/// Uniformly sampled wind-speed record in m/s. Immutable by convention once
/// cleaned: every operation below returns a new series.
struct TimeSeries {
	std::int64_t start_time = 0; // UTC seconds
	std::int64_t step_seconds = kDefaultStepSeconds;
	std::vector<double> values;

	std::size_t size() const { return values.size(); }
	bool empty() const { return values.empty(); }

	std::int64_t time_at(std::size_t index) const {
		return start_time + static_cast<std::int64_t>(index) * step_seconds;
	}
};

/// Throws unless every value is finite and non-negative (wind speed is a
/// magnitude) and the step is positive.
inline void validate_clean(const TimeSeries& series) {
	if (series.step_seconds <= 0)
		throw NonUniformGrid("step_seconds must be positive");
	if (series.empty())
		throw SeriesTooShort("series must hold at least one value");
	for (double v : series.values) {
		if (!std::isfinite(v))
			throw CsvFormatError("series contains a non-finite value");
		if (v < 0.0)
			throw NegativeSpeed("wind speed " + std::to_string(v) + " is negative");
	}
}

/// Chronological split: first floor(n * fraction) points train, rest test.
inline std::pair<TimeSeries, TimeSeries>
split_train_test(const TimeSeries& series, double train_fraction) {
	if (!(train_fraction > 0.0 && train_fraction < 1.0))
		throw ConfigError("train_fraction must lie strictly between 0 and 1");
	const std::size_t n = series.size();
	const auto n_train = static_cast<std::size_t>(
	    std::floor(static_cast<double>(n) * train_fraction));
	if (n_train == 0 || n_train == n)
		throw EmptyPartition("split would leave an empty partition (n=" +
		                     std::to_string(n) + ")");
	TimeSeries train{series.start_time, series.step_seconds,
	                 {series.values.begin(), series.values.begin() + static_cast<std::ptrdiff_t>(n_train)}};
	TimeSeries test{series.time_at(n_train), series.step_seconds,
	                {series.values.begin() + static_cast<std::ptrdiff_t>(n_train), series.values.end()}};
	return {std::move(train), std::move(test)};
}

struct MeanAdjusted {
	TimeSeries series;
	double mean = 0.0;
};

inline MeanAdjusted mean_adjust(const TimeSeries& series) {
	if (series.empty())
		throw SeriesTooShort("cannot mean-adjust an empty series");
	const double mean = std::accumulate(series.values.begin(), series.values.end(), 0.0) /
	                    static_cast<double>(series.size());
	TimeSeries adjusted = series;
	for (double& v : adjusted.values) v -= mean;
	return {std::move(adjusted), mean};
}

inline TimeSeries restore_mean(const TimeSeries& series, double mean) {
	TimeSeries restored = series;
	for (double& v : restored.values) v += mean;
	return restored;
}

/// d-times differenced series plus the d dropped leading values (seed k is
/// the first element of the k-times differenced series), enough to undo the
/// transform exactly.
struct DifferencedSeries {
	TimeSeries series;
	std::vector<double> seeds;
};

inline DifferencedSeries difference(const TimeSeries& series, int d) {
	if (d < 0)
		throw ConfigError("differencing order must be non-negative");
	if (series.size() <= static_cast<std::size_t>(d))
		throw SeriesTooShort("series of length " + std::to_string(series.size()) +
		                     " cannot be differenced " + std::to_string(d) + " times");
	std::vector<double> current = series.values;
	std::vector<double> seeds;
	seeds.reserve(static_cast<std::size_t>(d));
	for (int level = 0; level < d; ++level) {
		seeds.push_back(current.front());
		std::vector<double> next(current.size() - 1);
		for (std::size_t i = 0; i + 1 < current.size(); ++i)
			next[i] = current[i + 1] - current[i];
		current = std::move(next);
	}
	TimeSeries out{series.start_time + static_cast<std::int64_t>(d) * series.step_seconds,
	               series.step_seconds, std::move(current)};
	return {std::move(out), std::move(seeds)};
}

/// Exact inverse of difference(): cumulative sums re-seeded level by level.
inline TimeSeries integrate(const TimeSeries& diffed,
                            const std::vector<double>& seed_values, int d) {
	if (d < 0 || seed_values.size() != static_cast<std::size_t>(d))
		throw SizeMismatch("integrate expects exactly d seed values");
	std::vector<double> current = diffed.values;
	for (int level = d - 1; level >= 0; --level) {
		std::vector<double> next(current.size() + 1);
		next[0] = seed_values[static_cast<std::size_t>(level)];
		for (std::size_t i = 0; i < current.size(); ++i)
			next[i + 1] = next[i] + current[i];
		current = std::move(next);
	}
	return {diffed.start_time - static_cast<std::int64_t>(d) * diffed.step_seconds,
	        diffed.step_seconds, std::move(current)};
}

} // namespace windcast
