#pragma once

#include <stdexcept>
#include <string>

namespace vulnpred {

/// Failure categories. Each maps onto one CLI exit code.
enum class ErrorKind {
  kConfig,      // invalid configuration or parameters
  kIngest,      // file could not be read or written
  kData,        // malformed data contents
  kSchema,      // column naming / kind problems
  kSplit,       // partitioning impossible for the requested spec
  kContract,    // caller violated an operation precondition
  kUndefined,   // metric undefined for the given input
  kDegenerate,  // model cannot be fit on the given data
  kDivergence,  // numeric blow-up during training
  kTraining,    // any other training-stage failure
  kTuning,      // every grid combination failed
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// CLI exit code: 1 config, 2 data, 3 training.
int exit_code_for(ErrorKind kind);

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace vulnpred
