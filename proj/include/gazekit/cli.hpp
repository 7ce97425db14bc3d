#pragma once

namespace gazekit {

// Full command-line entry point (generate | train | eval | report).
// Returns the process exit status; 0 only when every declared output was
// written and validated.
int run_cli(int argc, const char* const* argv);

}  // namespace gazekit
