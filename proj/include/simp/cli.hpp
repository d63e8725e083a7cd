#pragma once

#include <string>
#include <vector>

namespace simp::cli {

inline constexpr const char* kToolVersion = "0.1.0";

/// Runs one subcommand (synth, ingest, extract, train, eval, predict,
/// sample). args excludes the program name. Returns the process exit code:
/// 0 success, 1 usage, 2 data or input, 3 numeric.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

}  // namespace simp::cli
