#pragma once

#include <stdexcept>
#include <string>

namespace vlfuse {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Frame labels of composed transforms disagree.
struct FrameMismatchError : Error {
    using Error::Error;
};

// Projection of a point with non-positive depth.
struct BehindCameraError : Error {
    using Error::Error;
};

// Iterative solver hit its iteration cap without meeting tolerance.
struct NonConvergenceError : Error {
    using Error::Error;
};

// Calibration inputs do not constrain all degrees of freedom.
struct DegenerateMotionError : Error {
    using Error::Error;
};

struct RankDeficiencyError : Error {
    using Error::Error;
};

struct InsufficientSamplesError : Error {
    using Error::Error;
};

// Malformed input file; message carries the offending line or record.
struct ParseError : Error {
    using Error::Error;
};

// Records out of required time order.
struct OrderingError : Error {
    using Error::Error;
};

// Query time outside the recorded span.
struct OutOfRangeError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

}  // namespace vlfuse
