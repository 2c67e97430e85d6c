#pragma once

#include <stdexcept>
#include <string>

namespace bpdep {

// Base class for all library errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct CyclicHypergraph : Error {
  using Error::Error;
};

// The total weight of all complete derivations is zero.
struct DegenerateDistribution : Error {
  using Error::Error;
};

struct ShapeMismatch : Error {
  using Error::Error;
};

// Some token has no allowed parent under the given mask.
struct InfeasibleMask : Error {
  using Error::Error;
};

struct LengthMismatch : Error {
  using Error::Error;
};

struct ParseError : Error {
  int line;
  ParseError(const std::string& msg, int line_no)
      : Error(msg + " (line " + std::to_string(line_no) + ")"), line(line_no) {}
};

// HEAD column of a CoNLL block does not encode a tree.
struct CycleError : Error {
  using Error::Error;
};

struct NonProjectiveGold : Error {
  using Error::Error;
};

struct TapeMismatch : Error {
  using Error::Error;
};

struct EmptyCorpus : Error {
  using Error::Error;
};

struct ChecksumError : Error {
  using Error::Error;
};

struct VersionError : Error {
  using Error::Error;
};

}  // namespace bpdep
