#pragma once

#include <stdexcept>
#include <string>

namespace fpklab {

/// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct ZeroMassError : Error {
    using Error::Error;
};
struct GridMismatchError : Error {
    using Error::Error;
};
struct DimensionUnsupportedError : Error {
    using Error::Error;
};
struct MassLeakageError : Error {
    using Error::Error;
};
struct ConstantsMissingError : Error {
    using Error::Error;
};
struct NonSmoothPsiError : Error {
    using Error::Error;
};
struct AnisotropicDiffusionError : Error {
    using Error::Error;
};
struct EmptyTrajectoryError : Error {
    using Error::Error;
};
struct StabilityViolationError : Error {
    using Error::Error;
};

/// Internal scheme assertion: a conservative step produced a negative cell.
struct NegativeDensityError : Error {
    using Error::Error;
};
struct NotConfiningError : Error {
    using Error::Error;
};

struct NoConvergenceError : Error {
    using Error::Error;
};

/// Thrown when a moment channel or boundary mass exits the trusted range.
/// Expected for subinvariant (exponentially growing) scenarios run too long.
struct BlowUpError : Error {
    BlowUpError(const std::string& what, double t) : Error(what), time(t) {}
    double time;
};

struct TimeGridMismatchError : Error {
    using Error::Error;
};
struct WindowTooShortError : Error {
    using Error::Error;
};
struct HypothesisViolatedError : Error {
    using Error::Error;
};

/// Configuration parse/validation failure with location diagnostics.
struct ConfigError : Error {
    ConfigError(const std::string& what, int line_no = 0, const std::string& field_name = "")
        : Error(what), line(line_no), field(field_name) {}
    int line;
    std::string field;
};

}  // namespace fpklab
