#pragma once

#include <vector>

#include "windcast/errors.hpp"
#include "windcast/time_series.hpp"

namespace windcast {

/// Invertible linear map between physical wind speeds and a network range
/// such as [0.1, 0.9]. Fit on training data only and reused on test data.
struct ScalingParams {
	double source_min = 0.0;
	double source_max = 1.0;
	double target_lo = 0.1;
	double target_hi = 0.9;
};

inline ScalingParams fit_scaler(const TimeSeries& series,
                                double target_lo = 0.1, double target_hi = 0.9) {
	if (!(target_lo < target_hi))
		throw ConfigError("scaling targets must satisfy target_lo < target_hi");
	if (series.size() < 2)
		throw SeriesTooShort("need at least two values to fit a scaler");
	double lo = series.values.front();
	double hi = lo;
	for (double v : series.values) {
		if (v < lo) lo = v;
		if (v > hi) hi = v;
	}
	if (lo == hi)
		throw ConstantSeries("cannot scale a constant series");
	return {lo, hi, target_lo, target_hi};
}

/// Extrapolation outside [source_min, source_max] is allowed; callers that
/// care flag it in their reports.
inline double apply_scale(const ScalingParams& params, double x) {
	const double t = (x - params.source_min) / (params.source_max - params.source_min);
	return params.target_lo + t * (params.target_hi - params.target_lo);
}

inline double invert_scale(const ScalingParams& params, double u) {
	const double t = (u - params.target_lo) / (params.target_hi - params.target_lo);
	return params.source_min + t * (params.source_max - params.source_min);
}

inline std::vector<double> apply_scale(const ScalingParams& params,
                                       const std::vector<double>& xs) {
	std::vector<double> out(xs.size());
	for (std::size_t i = 0; i < xs.size(); ++i) out[i] = apply_scale(params, xs[i]);
	return out;
}

inline std::vector<double> invert_scale(const ScalingParams& params,
                                        const std::vector<double>& us) {
	std::vector<double> out(us.size());
	for (std::size_t i = 0; i < us.size(); ++i) out[i] = invert_scale(params, us[i]);
	return out;
}

} // namespace windcast
