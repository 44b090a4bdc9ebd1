#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace shortpanel {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

class DegenerateProjector : public Error {
 public:
  using Error::Error;
};

class IdentificationFailure : public Error {
 public:
  using Error::Error;
};

class SimulationFailure : public Error {
 public:
  using Error::Error;
};

class IngestError : public Error {
 public:
  using Error::Error;
};

// Non-fatal diagnostics (clipping, precondition flags) travel with results.
using Warnings = std::vector<std::string>;

}  // namespace shortpanel
