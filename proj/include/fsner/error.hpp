#pragma once

#include <stdexcept>
#include <string>

namespace fsner {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent annotated data.
class CorpusError : public Error {
 public:
  using Error::Error;
};

/// Invalid prompt inputs or templates.
class PromptError : public Error {
 public:
  using Error::Error;
};

/// Fixture store lookup or write failures.
class FixtureError : public Error {
 public:
  using Error::Error;
};

/// Metric computation called with incompatible inputs.
class EvalError : public Error {
 public:
  using Error::Error;
};

/// Invalid run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace fsner
