#pragma once

#include <stdexcept>
#include <string>

namespace fairbfl {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// model-math
struct EmptyData : Error { using Error::Error; };
struct NumericalDivergence : Error { using Error::Error; };
struct ZeroVector : Error { using Error::Error; };

// data
struct FormatError : Error { using Error::Error; };
struct PartitionError : Error { using Error::Error; };

// ledger
struct UnknownIdentity : Error { using Error::Error; };
struct MiningTimeout : Error { using Error::Error; };
struct RejectedBlock : Error { using Error::Error; };

// incentive
struct ShapeError : Error { using Error::Error; };
struct EmptyAggregation : Error { using Error::Error; };

// orchestrator
struct ProtocolViolation : Error { using Error::Error; };
struct UnsupportedForConvergenceCheck : Error { using Error::Error; };

// cli-report
struct ConfigError : Error { using Error::Error; };
struct EmptyMetrics : Error { using Error::Error; };

}  // namespace fairbfl
