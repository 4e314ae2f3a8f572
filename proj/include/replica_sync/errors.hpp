#pragma once

#include <stdexcept>
#include <string>

namespace replica_sync {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed descriptor, config or log document.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// An edit could not be applied to a model.
class ApplyError : public Error {
 public:
  using Error::Error;
};

/// Two models do not share a node universe.
class IncompatibleModelsError : public Error {
 public:
  using Error::Error;
};

/// Message or request violates the session protocol.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Statistical procedure called outside its domain.
class StatsError : public Error {
 public:
  using Error::Error;
};

/// Simulation exceeded its event budget.
class LivelockError : public Error {
 public:
  using Error::Error;
};

}  // namespace replica_sync
