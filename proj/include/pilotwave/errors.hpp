#pragma once

#include <stdexcept>
#include <string>

namespace pw {

// Error taxonomy mirrors the CLI exit contract: config -> 1, numeric -> 2,
// certification -> 3.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidArgument : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct NumericError : Error {
  using Error::Error;
};

struct CertificationError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace pw
