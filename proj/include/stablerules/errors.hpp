#pragma once

#include <stdexcept>
#include <string>

namespace stablerules {

// Base for everything this library throws. Subtypes mirror the failure
// modes callers are expected to distinguish.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error { using Error::Error; };
struct InvalidValue : Error { using Error::Error; };
struct InvalidLabel : Error { using Error::Error; };
struct InvalidFraction : Error { using Error::Error; };

struct EmptyDatabase : Error { using Error::Error; };
struct MissingSupportEntry : Error { using Error::Error; };
struct UnknownItem : Error { using Error::Error; };

struct EmptyRuleSet : Error { using Error::Error; };
struct BoundsInfeasible : Error { using Error::Error; };
struct NonConvergence : Error { using Error::Error; };

struct RankDeficient : Error { using Error::Error; };
struct Singular : Error { using Error::Error; };

struct TooFewStableColumns : Error { using Error::Error; };
struct EmptySelection : Error { using Error::Error; };

struct EmptyInput : Error { using Error::Error; };
struct TooFewSamples : Error { using Error::Error; };
struct TooFewItems : Error { using Error::Error; };

struct SchemaMismatch : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct DegenerateColumn : Error { using Error::Error; };
struct AllMissingColumn : Error { using Error::Error; };

struct UnknownKey : Error { using Error::Error; };
struct ConfigTypeError : Error { using Error::Error; };

}  // namespace stablerules
