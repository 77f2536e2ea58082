#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace tpmtl {

/// Process exit codes of the command-line front end.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitInvalid = 2, kExitNumerical = 3 };

/// Runs one subcommand (gen-data, train, eval, render, gradcheck, compare).
/// `args` excludes the program name. Errors are reported on `err` and mapped
/// onto ExitCode; nothing is thrown.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Parses "HxW" (e.g. "32x32").
std::pair<std::size_t, std::size_t> parse_size(const std::string& text);

}  // namespace tpmtl
