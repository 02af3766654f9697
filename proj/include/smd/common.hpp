#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace smd {

using Cycle = std::int64_t;

// Sentinel for "no pending event"; kept well below the int64 limit so that
// small offsets can be added without overflow.
constexpr Cycle kNever = std::numeric_limits<Cycle>::max() / 4;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when a command is applied before it is legal. Timing bugs must be loud.
struct ProtocolError : std::logic_error {
  using std::logic_error::logic_error;
};

struct InvariantError : std::logic_error {
  using std::logic_error::logic_error;
};

struct RangeError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

struct ParseError : std::runtime_error {
  ParseError(const std::string& what, long line_no)
      : std::runtime_error(what + " (line " + std::to_string(line_no) + ")"), line(line_no) {}
  long line;
};

}  // namespace smd
