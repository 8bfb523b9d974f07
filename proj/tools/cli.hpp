#pragma once

// Command-line front end. Every command writes its outputs and a
// manifest.json into --out; `replay` re-runs a manifest and compares bytes.

#include <iosfwd>
#include <string>
#include <vector>

namespace kahs::cli {

enum ExitCode : int {
  kSuccess = 0,
  kCheckFailure = 1,
  kUsage = 2,
  kIo = 3,
};

/// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Lowercase hex SHA-256.
std::string sha256_hex(const std::string& bytes);

}  // namespace kahs::cli
