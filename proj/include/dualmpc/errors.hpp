#pragma once

#include <stdexcept>
#include <string>

namespace dualmpc {

/// Bad user input: wrong dimensions, out-of-domain parameters, malformed config.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// A numerical routine did not produce a usable answer.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, std::string status)
      : std::runtime_error(what), status_(std::move(status)) {}
  const std::string& status() const { return status_; }

 private:
  std::string status_;
};

/// The alternating-projection distance oracle hit its iteration cap.
class OracleError : public std::runtime_error {
 public:
  OracleError(const std::string& what, double last_gap)
      : std::runtime_error(what), last_gap_(last_gap) {}
  double last_gap() const { return last_gap_; }

 private:
  double last_gap_;
};

/// Separation was requested from a certificate that does not prove a positive distance.
class NoSeparationError : public std::runtime_error {
 public:
  explicit NoSeparationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dualmpc
