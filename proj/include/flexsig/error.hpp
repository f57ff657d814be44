/*
 * Copyright 2026 The flexsig Authors
 *
 * This software is licensed under the terms of the Apache License Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#pragma once

#include <stdexcept>
#include <string>

namespace flexsig {

/// Bad or inconsistent configuration. `field()` names the offending key.
class ConfigError : public std::runtime_error {
public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field.empty() ? what : field + ": " + what), field_(std::move(field)), detail_(what) {}
  const std::string& field() const noexcept { return field_; }
  /// The message without the field prefix.
  const std::string& detail() const noexcept { return detail_; }

private:
  std::string field_;
  std::string detail_;
};

/// Malformed input file. `line()` is 1-based, 0 when unknown.
class ParseError : public std::runtime_error {
public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// Well-formed data that breaks a domain invariant.
class ValidationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure (no bracket, divergence, non-finite values).
class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Recomputed summaries disagree with what was written.
class VerifyError : public std::runtime_error {
public:
  VerifyError(double discrepancy, const std::string& what)
      : std::runtime_error(what), discrepancy_(discrepancy) {}
  double discrepancy() const noexcept { return discrepancy_; }

private:
  double discrepancy_;
};

}  // namespace flexsig
