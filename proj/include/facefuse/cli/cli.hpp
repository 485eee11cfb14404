#pragma once

#include <string>
#include <vector>

namespace facefuse {

/// Runs one subcommand (synth, train, extract, cross, fuse, report,
/// gradcheck). Returns 0 on success, 1 on usage or input errors, 2 on
/// internal failures. Diagnostics go to stderr.
int cli_dispatch(int argc, const char* const* argv);

/// Same with the arguments after the program name.
int cli_dispatch(const std::vector<std::string>& args);

}  // namespace facefuse
