#pragma once

#include <stdexcept>
#include <string>

namespace sgm {

// Error taxonomy. Each category maps to a stable CLI exit code and a
// machine-parseable one-line prefix (see tools/).
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& msg)
      : std::runtime_error(msg), category_(std::move(category)) {}
  const std::string& category() const { return category_; }

 private:
  std::string category_;
};

// Malformed on-disk data: size mismatches, bad token counts, corrupt containers.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& msg) : Error("parse", msg) {}
};

// Invalid configuration: unknown class id, bad ablation name, shape mismatch.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error("config", msg) {}
};

// Structurally valid input on which the operation is undefined
// (empty cloud, single point, zero real nodes, single-class labels).
class DegenerateInputError : public Error {
 public:
  explicit DegenerateInputError(const std::string& msg) : Error("degenerate", msg) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error("io", msg) {}
};

// Runtime failures of the optimization loop (non-finite loss, generation failure).
class TrainError : public Error {
 public:
  explicit TrainError(const std::string& msg) : Error("train", msg) {}
};

}  // namespace sgm
