#pragma once

#include <stdexcept>
#include <string>

namespace gpfr {

// Exception hierarchy shared by every stage. The CLI maps each family onto
// an exit code (usage 1, I/O 2, numeric 3).

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid shapes or model configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Caller violated an operation precondition.
class UsageError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  enum class Kind { kOpen, kMalformedHeader, kTruncated, kChecksum, kWrite, kMismatch };

  IoError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

// Non-finite values surfaced during training.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Pseudo synthesis could not draw from a required repository bucket.
class SynthesisError : public Error {
 public:
  SynthesisError(const std::string& what, int attribute, int class_label)
      : Error(what), attribute_(attribute), class_label_(class_label) {}

  int attribute() const noexcept { return attribute_; }
  int class_label() const noexcept { return class_label_; }

 private:
  int attribute_;
  int class_label_;
};

}  // namespace gpfr
