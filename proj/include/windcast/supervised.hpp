#pragma once

#include <string>
#include <vector>

#include "windcast/errors.hpp"
#include "windcast/time_series.hpp"

namespace windcast {

/// Lag-vector inputs paired with horizon-ahead targets. Input vectors are
/// oldest-first; the vector ending at series index i targets index
/// i + horizon_steps.
struct SupervisedSet {
	int num_lags = 1;
	int horizon_steps = 1;
	std::vector<std::vector<double>> inputs;
	std::vector<double> targets;

	std::size_t size() const { return targets.size(); }
};

inline SupervisedSet make_supervised(const TimeSeries& series, int num_lags,
                                     int horizon_steps) {
	if (num_lags < 1)
		throw ConfigError("num_lags must be at least 1");
	if (horizon_steps < 1)
		throw ConfigError("horizon_steps must be at least 1");
	const std::size_t n = series.size();
	const std::size_t needed = static_cast<std::size_t>(num_lags) +
	                           static_cast<std::size_t>(horizon_steps);
	if (n < needed)
		throw SeriesTooShort("series of length " + std::to_string(n) +
		                     " is too short for " + std::to_string(num_lags) +
		                     " lags at horizon " + std::to_string(horizon_steps));

	SupervisedSet set;
	set.num_lags = num_lags;
	set.horizon_steps = horizon_steps;
	const std::size_t pairs = n - needed + 1;
	set.inputs.reserve(pairs);
	set.targets.reserve(pairs);
	for (std::size_t end = static_cast<std::size_t>(num_lags) - 1;
	     end + static_cast<std::size_t>(horizon_steps) < n; ++end) {
		std::vector<double> lag(series.values.begin() + static_cast<std::ptrdiff_t>(end + 1 - static_cast<std::size_t>(num_lags)),
		                        series.values.begin() + static_cast<std::ptrdiff_t>(end + 1));
		set.inputs.push_back(std::move(lag));
		set.targets.push_back(series.values[end + static_cast<std::size_t>(horizon_steps)]);
	}
	return set;
}

} // namespace windcast
