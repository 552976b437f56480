#pragma once

#include <stdexcept>
#include <string>

namespace texplain {

// Base for all texplain runtime failures.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File missing, unreadable, or undecodable.
class IoError : public Error {
 public:
  using Error::Error;
};

// Persisted artifact does not match the expected schema
// (model version mismatch, malformed CSV header, ...).
class SchemaError : public Error {
 public:
  using Error::Error;
};

// The requested GLCM has no valid pixel pair for its (distance, angle).
class DegenerateGlcmError : public Error {
 public:
  using Error::Error;
};

}  // namespace texplain
