#pragma once

#include <stdexcept>
#include <string>

namespace scdt {

// Error taxonomy mirrors the CLI exit codes: usage/config problems exit 1,
// bad input data exits 2, provider (network/LLM) trouble exits 3.

class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

class ProviderError : public std::runtime_error {
 public:
  explicit ProviderError(const std::string& what) : std::runtime_error(what) {}
};

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitProvider = 3,
};

}  // namespace scdt
