#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace golf {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent lengths or shapes between arguments.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Scalar root solve failed to converge.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// A recursive filter produced a non-finite sample.
class FilterOverflow : public Error {
 public:
  FilterOverflow(std::size_t index, const std::string& what)
      : Error(what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// Loss or gradient became non-finite during optimization.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

using WarningHandler = std::function<void(std::string_view)>;

/// Replaces the process-wide warning sink (default: std::clog). Passing an
/// empty handler silences warnings.
void set_warning_handler(WarningHandler handler);
void warn(std::string_view message);

}  // namespace golf
