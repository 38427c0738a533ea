#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hems {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Trace file has missing, extra or misnamed columns.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// A value in a trace row violates a channel invariant.
class ValidationError : public Error {
 public:
  ValidationError(std::size_t row, const std::string& what)
      : Error("row " + std::to_string(row) + ": " + what), row_(row) {}

  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

// Horizon is not a positive multiple of 24 slots.
class LengthError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration value.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// NaN/inf where a finite number is required.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Slot index, episode window or buffer occupancy out of range.
class RangeError : public Error {
 public:
  using Error::Error;
};

// Tensor shapes disagree, or a forward cache does not belong to the network.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// The comfort band cannot be reached even with the HVAC at full power (or off).
class InfeasibleError : public Error {
 public:
  InfeasibleError(std::size_t slot, const std::string& what)
      : Error("slot " + std::to_string(slot) + ": " + what), slot_(slot) {}

  std::size_t slot() const { return slot_; }

 private:
  std::size_t slot_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace hems
