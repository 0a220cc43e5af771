#pragma once

#include <stdexcept>
#include <string>

namespace scenediff {

// Every failure surfaced by the library derives from Error so callers can
// catch the whole family at a boundary (the CLI maps them to exit codes).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateRotation : Error { using Error::Error; };
struct NotARotation : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct EmptyMesh : Error { using Error::Error; };
struct InvalidMesh : Error { using Error::Error; };
struct DegenerateTriangle : Error { using Error::Error; };
struct UnknownLabel : Error { using Error::Error; };
struct GraphSizeMismatch : Error { using Error::Error; };
struct NonFiniteGradient : Error { using Error::Error; };
struct NonFiniteState : Error { using Error::Error; };
struct DivergedTraining : Error { using Error::Error; };
struct PlacementFailure : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

}  // namespace scenediff
