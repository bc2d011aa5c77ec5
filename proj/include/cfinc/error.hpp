#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cfinc {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --- gateway ---------------------------------------------------------------

// Connection failures, timeouts, 429 and 5xx replies. Retried by the gateway.
class TransportError : public Error {
 public:
  using Error::Error;
};

// Missing credentials or a 401/403 reply. Never retried.
class AuthError : public Error {
 public:
  using Error::Error;
};

// Non-retryable backend reply (4xx other than auth, undecodable body).
class BackendError : public Error {
 public:
  using Error::Error;
};

class FixtureMiss : public Error {
 public:
  explicit FixtureMiss(std::string fingerprint)
      : Error("no fixture entry for request fingerprint " + fingerprint),
        fingerprint_(std::move(fingerprint)) {}
  const std::string& fingerprint() const { return fingerprint_; }

 private:
  std::string fingerprint_;
};

class ScoreOutOfRange : public Error {
 public:
  using Error::Error;
};

class MalformedScores : public Error {
 public:
  using Error::Error;
};

class ImageError : public Error {
 public:
  using Error::Error;
};

class InvalidRequest : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// --- keywordgen / inception -----------------------------------------------

// Raised when a model reply lacks a labeled keyword section. Keeps the reply.
class ParseError : public Error {
 public:
  ParseError(const std::string& section, std::string raw)
      : Error("keyword reply is missing section '" + section + "'"),
        section_(section),
        raw_(std::move(raw)) {}
  const std::string& section() const { return section_; }
  const std::string& raw_text() const { return raw_; }

 private:
  std::string section_;
  std::string raw_;
};

class EmptyPool : public Error {
 public:
  using Error::Error;
};

class PlaceholderError : public Error {
 public:
  using Error::Error;
};

// --- bench -------------------------------------------------------------------

class SchemaError : public Error {
 public:
  SchemaError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class UnknownPattern : public SchemaError {
 public:
  UnknownPattern(std::size_t line, const std::string& pattern)
      : SchemaError(line, "unknown MMVP visual pattern '" + pattern + "'") {}
};

class MissingGold : public Error {
 public:
  using Error::Error;
};

class MissingPairId : public Error {
 public:
  using Error::Error;
};

class JudgeParseError : public Error {
 public:
  JudgeParseError(const std::string& what, std::string raw)
      : Error(what), raw_(std::move(raw)) {}
  const std::string& raw_text() const { return raw_; }

 private:
  std::string raw_;
};

// --- runner / store ----------------------------------------------------------

class IncompleteRun : public Error {
 public:
  using Error::Error;
};

class IOFailure : public Error {
 public:
  using Error::Error;
};

class DuplicateKey : public Error {
 public:
  using Error::Error;
};

class CorruptRecord : public Error {
 public:
  CorruptRecord(std::size_t line, const std::string& what)
      : Error("corrupt record at line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace cfinc
