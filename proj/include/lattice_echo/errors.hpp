#pragma once

#include <stdexcept>
#include <string>

namespace lattice_echo {

// Base class for all toolkit errors. Subclasses distinguish validation
// failures (bad input) from numerical failures (data inconsistent with a
// lattice); the CLI maps them to different exit codes.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SingularBasis : Error {
  using Error::Error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

struct WindowTooLarge : Error {
  using Error::Error;
};

struct RadiusExceedsWindow : Error {
  using Error::Error;
};

struct GridTooLarge : Error {
  using Error::Error;
};

struct LengthMismatch : Error {
  using Error::Error;
};

struct GridMismatch : Error {
  using Error::Error;
};

struct RankDeficient : Error {
  using Error::Error;
};

struct NotALattice : Error {
  using Error::Error;
};

struct InsufficientPeaks : Error {
  using Error::Error;
};

struct PhaseUnidentifiable : Error {
  using Error::Error;
};

struct ParseError : Error {
  int line = 0;
  ParseError(int line_, const std::string& what)
      : Error("line " + std::to_string(line_) + ": " + what), line(line_) {}
};

struct ValidationError : Error {
  std::string key;
  ValidationError(std::string key_, const std::string& what)
      : Error(key_ + ": " + what), key(std::move(key_)) {}
};

}  // namespace lattice_echo
