// Copyright 2026 The uiinstruct Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace uiinstruct {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// core-model
class NoContainingElement : public Error {
 public:
  using Error::Error;
};

// detector-gateway
class SourceUnavailable : public Error {
 public:
  using Error::Error;
};

class MalformedDetection : public Error {
 public:
  using Error::Error;
};

// llm-gateway
class BackendExhausted : public Error {
 public:
  BackendExhausted(const std::string& what, int attempts) : Error(what), attempts_(attempts) {}
  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

/// Non-retryable backend failure (4xx-class).
class BackendRefused : public Error {
 public:
  using Error::Error;
};

/// Retryable backend failure: timeouts, 429, 5xx, dropped connections.
/// Backends raise it; the gateway consumes it.
class TransientBackendError : public Error {
 public:
  using Error::Error;
};

class ParseFailure : public Error {
 public:
  using Error::Error;
};

// datagen
class DroppedSample : public Error {
 public:
  using Error::Error;
};

class PreconditionViolation : public Error {
 public:
  using Error::Error;
};

// dataset-assembler
class UnreadableImage : public Error {
 public:
  using Error::Error;
};

class InsufficientSamples : public Error {
 public:
  using Error::Error;
};

// eval-harness
class CorpusTooSmall : public Error {
 public:
  using Error::Error;
};

class EndpointUnavailable : public Error {
 public:
  using Error::Error;
};

class MissingDescription : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace uiinstruct
