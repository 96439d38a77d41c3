#pragma once

#include <stdexcept>
#include <string>

namespace dotadmm {

// Error hierarchy: all failures surface as typed exceptions so callers can
// map them to process exit codes without string matching.

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvalidParams : Error {
  using Error::Error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

struct DisconnectedGraph : Error {
  using Error::Error;
};

struct DuplicateEdge : Error {
  using Error::Error;
};

struct IndexOutOfRange : Error {
  using Error::Error;
};

struct InfeasibleEdgeCount : Error {
  using Error::Error;
};

struct SingularSystem : Error {
  using Error::Error;
};

struct NoUniqueMinimizer : Error {
  using Error::Error;
};

struct NonConvergent : Error {
  using Error::Error;
};

// Configuration / input file problems. Carries the offending key or line so
// the CLI can name it in the error message.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace dotadmm
