#pragma once

#include <stdexcept>
#include <string>

namespace ruelle {

enum class ErrorKind {
  InvalidArgument,
  Capacity,
  NonPrimitive,
  NoConvergence,
  BracketFailure,
  FlatRoof,
  SeparationFailure,
  NonPositive,
  Schema,
};

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error(ErrorKind::InvalidArgument, what) {}
};

/// A combinatorial object (word list, block space, orbit list) would exceed its configured cap.
class CapacityError : public Error {
 public:
  CapacityError(const std::string& what, double requested, double cap)
      : Error(ErrorKind::Capacity, what), requested_(requested), cap_(cap) {}
  double requested() const noexcept { return requested_; }
  double cap() const noexcept { return cap_; }

 private:
  double requested_;
  double cap_;
};

class NonPrimitive : public Error {
 public:
  explicit NonPrimitive(const std::string& what) : Error(ErrorKind::NonPrimitive, what) {}
};

class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& what, double residual)
      : Error(ErrorKind::NoConvergence, what + " (residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class BracketFailure : public Error {
 public:
  explicit BracketFailure(const std::string& what) : Error(ErrorKind::BracketFailure, what) {}
};

class FlatRoof : public Error {
 public:
  explicit FlatRoof(const std::string& what) : Error(ErrorKind::FlatRoof, what) {}
};

class SeparationFailure : public Error {
 public:
  SeparationFailure(const std::string& what, double best_delta)
      : Error(ErrorKind::SeparationFailure,
              what + " (best achieved delta " + std::to_string(best_delta) + ")"),
        best_delta_(best_delta) {}
  double best_delta() const noexcept { return best_delta_; }

 private:
  double best_delta_;
};

class NonPositive : public Error {
 public:
  explicit NonPositive(const std::string& what) : Error(ErrorKind::NonPositive, what) {}
};

class SchemaError : public Error {
 public:
  SchemaError(const std::string& path, const std::string& what)
      : Error(ErrorKind::Schema, path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace ruelle
