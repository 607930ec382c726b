#pragma once

#include <stdexcept>
#include <string>

namespace oae {

// Invalid configuration or argument values (bad rates, empty pulses, ...).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Not enough usable data to produce a result (e.g. every batch was gated out).
class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A screening session could not proceed, e.g. the probe never fit.
class SessionAbortedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File or stream level failures (missing files, malformed WAV headers, ...).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace oae
