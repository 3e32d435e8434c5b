#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lambada {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Record-level input error; `line` is 1-based, 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& detail, const std::string& source = {})
      : Error((source.empty() ? "" : source + ": ") + (line ? "line " + std::to_string(line) + ": " : "") + detail),
        line_(line),
        detail_(detail) {}
  std::size_t line() const { return line_; }
  const std::string& detail() const { return detail_; }

 private:
  std::size_t line_;
  std::string detail_;
};

/// Failure inside one step of the augmentation pipeline.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

}  // namespace lambada
