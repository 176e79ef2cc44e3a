#pragma once

#include <stdexcept>
#include <string>

namespace mgnc {

// Bad arguments or configuration supplied by the caller.
struct UsageError : std::invalid_argument {
  explicit UsageError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Malformed input file (embedding file, corpus, checkpoint).
struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values or other numeric failure at runtime.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace mgnc
