#pragma once

#include <stdexcept>
#include <string>

namespace residcorr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition (bad dimensions, k out of range, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data (files, missing genotypes).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Numerically degenerate input: rank deficiency, no variable SNPs, zero denominators.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

}  // namespace residcorr
