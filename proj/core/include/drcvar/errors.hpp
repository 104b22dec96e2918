#pragma once

#include <stdexcept>
#include <string>

namespace drcvar {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree (e.g. estimator vs. distribution dimensions).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Malformed input data: CSV ingestion, schema violations, degenerate splits.
class DataError : public Error {
 public:
  using Error::Error;
};

/// The conic solver or a scalar minimizer did not produce a usable answer.
class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace drcvar
