#pragma once

#include <stdexcept>
#include <string>

namespace dartkit {

// Base class for all library errors. Each category below matches one
// failure mode documented on the public operations.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define DARTKIT_DEFINE_ERROR(Name)                                  \
    class Name : public Error {                                     \
    public:                                                         \
        explicit Name(const std::string& msg)                       \
            : Error(std::string(#Name) + ": " + msg) {}             \
    }

DARTKIT_DEFINE_ERROR(MalformedFile);
DARTKIT_DEFINE_ERROR(InvariantViolation);
DARTKIT_DEFINE_ERROR(MissingColumn);
DARTKIT_DEFINE_ERROR(DegenerateSeries);
DARTKIT_DEFINE_ERROR(InsufficientOverlap);
DARTKIT_DEFINE_ERROR(EmptySeries);
DARTKIT_DEFINE_ERROR(InsufficientHistory);
DARTKIT_DEFINE_ERROR(UnknownZone);
DARTKIT_DEFINE_ERROR(DimensionMismatch);
DARTKIT_DEFINE_ERROR(SingleClassData);
DARTKIT_DEFINE_ERROR(NonFinite);
DARTKIT_DEFINE_ERROR(EmptyGrid);
DARTKIT_DEFINE_ERROR(NoCrossing);
DARTKIT_DEFINE_ERROR(EmptyBucket);
DARTKIT_DEFINE_ERROR(ZeroLoad);
DARTKIT_DEFINE_ERROR(MissingReference);
DARTKIT_DEFINE_ERROR(DegenerateRegressor);
DARTKIT_DEFINE_ERROR(MissingCoefficient);
DARTKIT_DEFINE_ERROR(SingleZone);
DARTKIT_DEFINE_ERROR(SplitOverlap);
DARTKIT_DEFINE_ERROR(MissingCalibration);
DARTKIT_DEFINE_ERROR(NoFiredSignals);
DARTKIT_DEFINE_ERROR(EmptyTrades);
DARTKIT_DEFINE_ERROR(EmptySupport);
DARTKIT_DEFINE_ERROR(IoError);
DARTKIT_DEFINE_ERROR(ConfigError);

#undef DARTKIT_DEFINE_ERROR

}  // namespace dartkit
