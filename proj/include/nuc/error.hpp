#pragma once

#include <stdexcept>
#include <string>

namespace nuc {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Violated input contract (bad shape, out-of-range parameter, ...).
class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& msg) : Error(msg) {}
};

/// A hypothesis that must be verified numerically did not hold (h̃ positivity).
class CertificateError : public Error {
 public:
  explicit CertificateError(const std::string& msg) : Error(msg) {}
};

class ConvergenceError : public Error {
 public:
  explicit ConvergenceError(const std::string& msg) : Error(msg) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw PreconditionError(msg);
}

}  // namespace nuc
