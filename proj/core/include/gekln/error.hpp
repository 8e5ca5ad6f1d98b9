#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gekln {

// Base of every error the library throws. `exit_code` follows the CLI
// convention: 2 input error, 3 compatibility error, 1 internal.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, int exit_code = 1)
      : std::runtime_error(what), exit_code_(exit_code) {}
  int exit_code() const noexcept { return exit_code_; }

 private:
  int exit_code_;
};

class FileNotFound : public Error {
 public:
  explicit FileNotFound(const std::string& path)
      : Error("file not found: " + path, 2), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what, 2), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what, 2) {}
};

class EmptyDataset : public Error {
 public:
  EmptyDataset() : Error("no record survived filtering", 2) {}
};

class IndexOutOfRange : public Error {
 public:
  explicit IndexOutOfRange(const std::string& what) : Error(what, 2) {}
};

class ShapeMismatch : public Error {
 public:
  explicit ShapeMismatch(const std::string& what) : Error("shape mismatch: " + what) {}
};

class NoTrace : public Error {
 public:
  NoTrace() : Error("backward called without a recorded forward pass") {}
};

class EmptyConceptSet : public Error {
 public:
  explicit EmptyConceptSet(std::size_t exercise)
      : Error("exercise " + std::to_string(exercise) + " has no related concepts") {}
};

class LengthMismatch : public Error {
 public:
  LengthMismatch(std::size_t a, std::size_t b)
      : Error("length mismatch: " + std::to_string(a) + " vs " + std::to_string(b)) {}
};

class DegenerateLabels : public Error {
 public:
  DegenerateLabels() : Error("AUC needs at least one positive and one negative label") {}
};

class IncompatibleCheckpoint : public Error {
 public:
  explicit IncompatibleCheckpoint(const std::string& what) : Error(what, 3) {}
};

}  // namespace gekln
