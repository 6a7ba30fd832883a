#pragma once

#include <stdexcept>
#include <string>

namespace srom {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

/// A point or parameter lies outside its domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A kernel was asked to read a value it was not given.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

class DegenerateFlux : public Error {
 public:
  using Error::Error;
};

/// The reduced mesh became empty, so the residual cannot be minimized.
class HyperReductionFailure : public Error {
 public:
  using Error::Error;
};

class UndefinedReference : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class StoreError : public Error {
 public:
  using Error::Error;
};

}  // namespace srom
