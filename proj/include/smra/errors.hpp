#pragma once

#include <stdexcept>
#include <string>

namespace smra {

// Common base so the CLI can map any framework failure to one exit code.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : Error {
  using Error::Error;
};

// Malformed record: carries the JSONL line number and the offending field path.
struct SchemaError : Error {
  int line = -1;
  std::string field;
  SchemaError(int line_no, std::string field_path, const std::string& msg)
      : Error("line " + std::to_string(line_no) + ", " + field_path + ": " + msg),
        line(line_no),
        field(std::move(field_path)) {}
};

struct ConfigError : Error {
  using Error::Error;
};

struct ValueError : Error {
  using Error::Error;
};

struct ShapeError : Error {
  using Error::Error;
};

struct TokenizerError : Error {
  using Error::Error;
};

struct EmptyRationale : Error {
  using Error::Error;
};

struct EmptyInput : Error {
  using Error::Error;
};

struct NoAttention : Error {
  using Error::Error;
};

struct BackendError : Error {
  using Error::Error;
};

struct NonFiniteLoss : Error {
  using Error::Error;
};

struct MissingErasedProbs : Error {
  using Error::Error;
};

struct MissingRationaleProbs : Error {
  using Error::Error;
};

struct MissingSlot : Error {
  using Error::Error;
};

struct ClientError : Error {
  using Error::Error;
};

}  // namespace smra
