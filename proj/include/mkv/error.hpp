#pragma once

#include <stdexcept>
#include <string>

namespace mkv {

enum class ErrorKind {
  InvalidArgument,  // bad input to a library call
  Config,           // configuration parse/validation
  Numerical,        // blow-up, singular matrix, overflow
  Io,
};

/// Library-wide structured error. `kind` drives the CLI exit-code mapping.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Non-finite state during time stepping; carries the offending step.
class BlowUpError : public Error {
 public:
  BlowUpError(std::size_t step, std::size_t particle, const std::string& what)
      : Error(ErrorKind::Numerical, what), step_(step), particle_(particle) {}
  std::size_t step() const noexcept { return step_; }
  std::size_t particle() const noexcept { return particle_; }

 private:
  std::size_t step_;
  std::size_t particle_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, const std::string& what) {
  if (!cond) throw Error(ErrorKind::InvalidArgument, what);
}

}  // namespace mkv
