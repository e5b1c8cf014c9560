#pragma once

#include <stdexcept>
#include <string>

namespace wrg {

/// Parameter outside the domain of an operation (maps to CLI exit code 1).
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// Quadrature or root-finding failure (maps to CLI exit code 2).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// A request that exceeds a configured resource cap.
class ResourceError : public std::runtime_error {
 public:
  explicit ResourceError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw DomainError(what);
}

}  // namespace wrg
