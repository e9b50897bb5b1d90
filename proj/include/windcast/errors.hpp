#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace windcast {

/// Base class for all windcast errors. `code()` is a stable machine-readable
/// identifier; the CLI maps it into its error JSON.
class Error : public std::runtime_error {
public:
	Error(std::string code, const std::string& message)
	    : std::runtime_error(message), code_(std::move(code)) {}

	const std::string& code() const noexcept { return code_; }

private:
	std::string code_;
};

#define WINDCAST_ERROR_TYPE(NAME)                                            \
	class NAME : public Error {                                               \
	public:                                                                   \
		explicit NAME(const std::string& message) : Error(#NAME, message) {}  \
	}

WINDCAST_ERROR_TYPE(CsvFormatError);
WINDCAST_ERROR_TYPE(NonUniformGrid);
WINDCAST_ERROR_TYPE(GapTooLong);
WINDCAST_ERROR_TYPE(NegativeSpeed);
WINDCAST_ERROR_TYPE(EmptyPartition);
WINDCAST_ERROR_TYPE(ConstantSeries);
WINDCAST_ERROR_TYPE(SeriesTooShort);
WINDCAST_ERROR_TYPE(SizeMismatch);
WINDCAST_ERROR_TYPE(RankDeficient);
WINDCAST_ERROR_TYPE(DegreeTooLarge);
WINDCAST_ERROR_TYPE(SingularSystem);
WINDCAST_ERROR_TYPE(NonStationary);
WINDCAST_ERROR_TYPE(InsufficientHistory);
WINDCAST_ERROR_TYPE(UndefinedCorrelation);
WINDCAST_ERROR_TYPE(TrainingDiverged);
WINDCAST_ERROR_TYPE(SchemaError);
WINDCAST_ERROR_TYPE(ConfigError);
WINDCAST_ERROR_TYPE(IoError);

#undef WINDCAST_ERROR_TYPE

} // namespace windcast
