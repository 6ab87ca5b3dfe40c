#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace relspar {

// Base class for every error thrown by this library. Subtypes map 1:1 onto
// the failure modes callers are expected to distinguish.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct SchemaError : Error { using Error::Error; };        // CSV header problems
struct DataError : Error { using Error::Error; };          // bad cell values
struct ShapeError : Error { using Error::Error; };         // ragged / inconsistent layout
struct ConfigError : Error { using Error::Error; };
struct ParameterError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

struct DegenerateCovariateError : Error { using Error::Error; };
struct SingularDesignError : Error { using Error::Error; };
struct SeparationError : Error { using Error::Error; };
struct PositivityError : Error { using Error::Error; };
struct SingularInformationError : Error { using Error::Error; };
struct SingularHessianError : Error { using Error::Error; };
struct EmptyActiveSetError : Error { using Error::Error; };

// Thrown when an iterative fit exhausts its budget; carries the last iterate
// so callers can inspect how far the solver got.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& msg, std::vector<double> last_iterate)
      : Error(msg), last_iterate(std::move(last_iterate)) {}
  std::vector<double> last_iterate;
};

// Non-finite objective during ascent; carries the last finite iterate.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& msg, std::vector<double> last_finite)
      : Error(msg), last_finite(std::move(last_finite)) {}
  std::vector<double> last_finite;
};

}  // namespace relspar
