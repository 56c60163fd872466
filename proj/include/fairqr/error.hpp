#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fairqr {

enum class ErrorKind {
  ingest,
  schema,
  conflict,
  lookup,
  build,
  empty_query,
  degenerate_exposure,
  no_target,
  dimension,
  prompt_template,
  parse,
  refiner,
  lexicon,
  input,
  spec,
  io,
};

std::string_view to_string(ErrorKind kind);

/// Base of every error raised by the library. The kind decides how callers
/// (the loop, the CLI) degrade or map it to an exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Malformed input record; `line` is 1-based.
class IngestError : public Error {
 public:
  IngestError(std::size_t line, const std::string& message)
      : Error(ErrorKind::ingest,
              "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Model output without a refinement marker. Carries the query the caller
/// should fall back to and the raw response for the trace.
class ParseError : public Error {
 public:
  ParseError(std::string fallback, std::string response)
      : Error(ErrorKind::parse, "response carries no REFINED_QUERY marker"),
        fallback_(std::move(fallback)),
        response_(std::move(response)) {}

  const std::string& fallback() const noexcept { return fallback_; }
  const std::string& response() const noexcept { return response_; }

 private:
  std::string fallback_;
  std::string response_;
};

}  // namespace fairqr
