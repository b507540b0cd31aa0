#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace knopp {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A digit (or shift) was requested past what a stream can certify.
class DepthExceeded : public Error {
 public:
  DepthExceeded(std::size_t requested, std::size_t depth)
      : Error("digit " + std::to_string(requested) + " requested beyond depth " +
              std::to_string(depth)),
        requested_(requested),
        depth_(depth) {}

  std::size_t requested() const { return requested_; }
  std::size_t depth() const { return depth_; }

 private:
  std::size_t requested_;
  std::size_t depth_;
};

class OutOfDomain : public Error {
 public:
  using Error::Error;
};

class InvalidTarget : public Error {
 public:
  using Error::Error;
};

class PrecisionUnreachable : public Error {
 public:
  using Error::Error;
};

/// A slope argument sits within bracket uncertainty of a maxima threshold.
class ThresholdAmbiguity : public Error {
 public:
  using Error::Error;
};

class WitnessNotFound : public Error {
 public:
  WitnessNotFound(int scale, const std::string& why)
      : Error("no witness at scale " + std::to_string(scale) + ": " + why), scale_(scale) {}

  int scale() const { return scale_; }

 private:
  int scale_;
};

/// Malformed point specification; `position` is the offending character offset.
class ParseError : public Error {
 public:
  ParseError(std::size_t position, const std::string& what)
      : Error("parse error at position " + std::to_string(position) + ": " + what),
        position_(position) {}

  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

}  // namespace knopp
