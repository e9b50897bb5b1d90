#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "windcast/errors.hpp"
#include "windcast/time_series.hpp"

namespace windcast {

/// Shortest decimal representation that parses back to the same double.
inline std::string format_double(double v) {
	char buf[32];
	auto res = std::to_chars(buf, buf + sizeof(buf), v);
	return std::string(buf, res.ptr);
}

/// Parses "YYYY-MM-DDTHH:MM:SS" (optional trailing 'Z', 'T' or space
/// separator) as UTC seconds since the epoch.
inline std::int64_t parse_timestamp_utc(const std::string& text) {
	int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
	char sep = 0;
	char tail[8] = {0};
	const int got = std::sscanf(text.c_str(), "%4d-%2d-%2d%c%2d:%2d:%2d%7s",
	                            &year, &month, &day, &sep, &hour, &minute, &second, tail);
	if (got < 7 || (sep != 'T' && sep != ' '))
		throw CsvFormatError("invalid ISO 8601 timestamp: '" + text + "'");
	if (got == 8 && std::string(tail) != "Z")
		throw CsvFormatError("unsupported timestamp suffix in '" + text + "'");
	if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 || minute > 59 || second > 60)
		throw CsvFormatError("timestamp field out of range: '" + text + "'");
	std::tm tm{};
	tm.tm_year = year - 1900;
	tm.tm_mon = month - 1;
	tm.tm_mday = day;
	tm.tm_hour = hour;
	tm.tm_min = minute;
	tm.tm_sec = second;
	const time_t t = timegm(&tm);
	if (t == static_cast<time_t>(-1) && !(year == 1969 && month == 12 && day == 31))
		throw CsvFormatError("timestamp out of range: '" + text + "'");
	return static_cast<std::int64_t>(t);
}

inline std::string format_timestamp_utc(std::int64_t utc_seconds) {
	const time_t t = static_cast<time_t>(utc_seconds);
	std::tm tm{};
	gmtime_r(&t, &tm);
	char buf[32];
	std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
	return buf;
}

namespace detail {

inline std::string strip_cr(std::string line) {
	if (!line.empty() && line.back() == '\r') line.pop_back();
	return line;
}

inline double parse_speed_field(const std::string& field, std::size_t line_no) {
	if (field.empty() || field == "nan" || field == "NaN" || field == "NA")
		return std::numeric_limits<double>::quiet_NaN(); // gap marker
	double value = 0.0;
	const char* begin = field.data();
	const char* end = begin + field.size();
	auto res = std::from_chars(begin, end, value);
	if (res.ec != std::errc{} || res.ptr != end)
		throw CsvFormatError("line " + std::to_string(line_no) +
		                     ": malformed wind_speed_mps value '" + field + "'");
	return value;
}

/// Fills NaN runs of length <= 2 by linear interpolation between the finite
/// neighbours; longer runs (or runs touching either end) are an error.
inline void repair_gaps(std::vector<double>& values) {
	const std::size_t n = values.size();
	std::size_t i = 0;
	while (i < n) {
		if (!std::isnan(values[i])) { ++i; continue; }
		std::size_t j = i;
		while (j < n && std::isnan(values[j])) ++j;
		const std::size_t run = j - i;
		if (i == 0 || j == n)
			throw GapTooLong("gap of " + std::to_string(run) +
			                 " value(s) touches the series boundary");
		if (run > 2)
			throw GapTooLong("gap of " + std::to_string(run) +
			                 " consecutive values exceeds the repair limit of 2");
		const double left = values[i - 1];
		const double right = values[j];
		for (std::size_t k = 0; k < run; ++k) {
			const double t = static_cast<double>(k + 1) / static_cast<double>(run + 1);
			values[i + k] = left + t * (right - left);
		}
		i = j;
	}
}

} // namespace detail

/// Loads `timestamp,wind_speed_mps` CSV into a cleaned uniform series.
/// Missing rows and empty value fields both count as gaps; gaps of up to two
/// consecutive steps are linearly interpolated.
inline TimeSeries load_series(const std::string& path) {
	std::ifstream file(path);
	if (!file)
		throw IoError("cannot open '" + path + "' for reading");

	std::string line;
	if (!std::getline(file, line))
		throw CsvFormatError("'" + path + "' is empty");
	if (detail::strip_cr(line) != "timestamp,wind_speed_mps")
		throw CsvFormatError("expected header 'timestamp,wind_speed_mps', got '" +
		                     detail::strip_cr(line) + "'");

	std::vector<std::int64_t> times;
	std::vector<double> speeds;
	std::size_t line_no = 1;
	while (std::getline(file, line)) {
		++line_no;
		line = detail::strip_cr(line);
		if (line.empty()) continue;
		const auto comma = line.find(',');
		if (comma == std::string::npos)
			throw CsvFormatError("line " + std::to_string(line_no) + ": expected 'timestamp,value'");
		const std::int64_t t = parse_timestamp_utc(line.substr(0, comma));
		if (!times.empty() && t <= times.back())
			throw CsvFormatError("line " + std::to_string(line_no) +
			                     ": timestamps must be strictly increasing");
		times.push_back(t);
		speeds.push_back(detail::parse_speed_field(line.substr(comma + 1), line_no));
	}
	if (times.empty())
		throw CsvFormatError("'" + path + "' holds no data rows");

	// Infer the grid step as the smallest row-to-row spacing; every spacing
	// must be an integer multiple of it, missing rows become gap markers.
	std::int64_t step = kDefaultStepSeconds;
	if (times.size() > 1) {
		step = times[1] - times[0];
		for (std::size_t i = 1; i + 1 < times.size(); ++i)
			step = std::min(step, times[i + 1] - times[i]);
	}
	std::vector<double> grid;
	grid.push_back(speeds[0]);
	for (std::size_t i = 1; i < times.size(); ++i) {
		const std::int64_t delta = times[i] - times[i - 1];
		if (delta % step != 0)
			throw NonUniformGrid("spacing of " + std::to_string(delta) +
			                     "s is not a multiple of the " +
			                     std::to_string(step) + "s grid step");
		for (std::int64_t k = 1; k < delta / step; ++k)
			grid.push_back(std::numeric_limits<double>::quiet_NaN());
		grid.push_back(speeds[i]);
	}

	detail::repair_gaps(grid);

	TimeSeries series{times.front(), step, std::move(grid)};
	validate_clean(series);
	return series;
}

inline void save_series(const std::string& path, const TimeSeries& series) {
	std::ofstream file(path);
	if (!file)
		throw IoError("cannot open '" + path + "' for writing");
	file << "timestamp,wind_speed_mps\n";
	for (std::size_t i = 0; i < series.size(); ++i)
		file << format_timestamp_utc(series.time_at(i)) << ','
		     << format_double(series.values[i]) << '\n';
	if (!file)
		throw IoError("failed writing '" + path + "'");
}

} // namespace windcast
