#pragma once

#include <stdexcept>
#include <string>

namespace netwatch {

/* Every failure the library raises derives from Error so callers can catch
 * the whole family or a specific condition.  The CLI maps these onto exit
 * codes (config -> 2, numeric -> 3, i/o -> 4). */
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// graph construction / mutation
struct InvalidOrder : Error { using Error::Error; };
struct SelfLoopRejected : Error { using Error::Error; };
struct IndexError : Error { using Error::Error; };

// series assembly and ingestion
struct EmptyIngest : Error { using Error::Error; };
struct NonContiguousSeries : Error { using Error::Error; };
struct IngestError : Error { using Error::Error; };

// statistics
struct MissingPredecessor : Error { using Error::Error; };
struct OrderMismatch : Error { using Error::Error; };

// estimation
struct NonConvergence : Error { using Error::Error; };
struct WindowTooShort : Error { using Error::Error; };

// charts / linear algebra
struct DimensionMismatch : Error { using Error::Error; };
struct SingularCovariance : Error { using Error::Error; };

// generation
struct NoUniqueStationary : Error { using Error::Error; };
struct InvalidAnomaly : Error { using Error::Error; };

// calibration
struct BracketFailure : Error { using Error::Error; };
struct NoValidRuns : Error { using Error::Error; };
struct UndefinedAcf : Error { using Error::Error; };

// front end
struct ConfigError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

} // namespace netwatch
