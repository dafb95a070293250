#pragma once

namespace sgt {

// Parses argv and dispatches to one subcommand (gen, train, eval, gradcheck,
// oracle, bench). Returns the process exit code: 0 success, 1 check failure,
// 2 usage or configuration error, 3 numerical abort.
int run_cli(int argc, const char* const* argv);

}  // namespace sgt
