#pragma once

#include <stdexcept>
#include <string>

namespace topoforge {

// Base for every error thrown by the library. Precondition violations on
// plain arguments use std::invalid_argument / std::domain_error instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The input netlist or file does not follow the documented schema.
class MalformedInput : public Error {
 public:
  using Error::Error;
};

// A design cannot be simulated (disconnected boundary or singular system).
class InfeasibleDesign : public Error {
 public:
  using Error::Error;
};

// A numerical routine produced non-finite values or ran out of options.
class NumericFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace topoforge
