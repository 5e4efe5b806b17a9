#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace carleman {

/// Base of every typed failure raised by the library. Plain argument
/// violations use std::invalid_argument instead.
class error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class parse_error : public error {
public:
  parse_error(std::size_t row, const std::string& what)
      : error("row " + std::to_string(row) + ": " + what), row_(row) {}

  /// 1-based line number of the offending row.
  std::size_t row() const noexcept { return row_; }

private:
  std::size_t row_;
};

/// tau coincides with an eigenvalue; the multiplier has a real pole.
class singular_parameter_error : public error {
public:
  using error::error;
};

class quadrature_failure : public error {
public:
  using error::error;
};

/// Time step too coarse for the conjugated operator's stencils.
class resolution_error : public error {
public:
  using error::error;
};

/// tau is not in the admissible set for the given spectrum and sigma.
class admissibility_error : public error {
public:
  using error::error;
};

class convergence_error : public error {
public:
  convergence_error(const std::string& what, double residual, double tolerance)
      : error(what + " (residual " + std::to_string(residual) + " > tolerance " +
              std::to_string(tolerance) + ")"),
        residual_(residual), tolerance_(tolerance) {}

  double residual() const noexcept { return residual_; }
  double tolerance() const noexcept { return tolerance_; }

private:
  double residual_;
  double tolerance_;
};

/// A proof-step check was requested outside the case it belongs to.
class regime_error : public error {
public:
  using error::error;
};

class degenerate_input_error : public error {
public:
  using error::error;
};

class io_error : public error {
public:
  io_error(std::string path, const std::string& what)
      : error(path + ": " + what), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

private:
  std::string path_;
};

class validation_error : public error {
public:
  explicit validation_error(std::vector<std::string> fields)
      : error(describe(fields)), fields_(std::move(fields)) {}

  const std::vector<std::string>& fields() const noexcept { return fields_; }

private:
  static std::string describe(const std::vector<std::string>& fields) {
    std::string s = "invalid or missing config fields:";
    for (const auto& f : fields) s += " " + f;
    return s;
  }

  std::vector<std::string> fields_;
};

} // namespace carleman
