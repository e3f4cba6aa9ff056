// core/include/mtlaug/error.h

// Copyright 2026 The mtlaug Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef MTLAUG_ERROR_H_
#define MTLAUG_ERROR_H_

#include <stdexcept>
#include <string>

namespace mtlaug {

/// Base of every error thrown by the library. The CLI maps subclasses to
/// exit codes, so keep the hierarchy flat.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (manifests, configs). Carries the 1-based line.
class ParseError : public Error {
 public:
  ParseError(const std::string &what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Unsupported or corrupt binary payloads (WAV codecs, feature blobs).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// An evaluation or training protocol cannot run on the given data.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

/// API misuse, e.g. calling backward on a non-scalar.
class UsageError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string &field, const std::string &what)
      : Error(field + ": " + what), field_(field) {}
  const std::string &field() const { return field_; }

 private:
  std::string field_;
};

/// Checksum or structural failure in a checkpoint container.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

class ConfigMismatchError : public Error {
 public:
  using Error::Error;
};

class MissingCorpusError : public Error {
 public:
  using Error::Error;
};

}  // namespace mtlaug

#endif  // MTLAUG_ERROR_H_
