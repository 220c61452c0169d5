#pragma once

// Batch command-line front end: synth, fit, predict, bench, export-config
// and residual. Exit codes: 0 success, 1 some pipelines failed, 2 usage or
// input error.

#include <string>
#include <vector>

namespace connecto::cli {

inline constexpr const char* kVersion = "0.1.0";

int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

/// Hex SHA-256 of a byte string and of a file's contents.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

}  // namespace connecto::cli
