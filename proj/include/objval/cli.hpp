#pragma once

namespace objval {

/// Entry point of the objval command line tool. Returns 0 on success, 2 on
/// usage errors and 1 on runtime failures.
int run_cli(int argc, const char* const* argv);

}  // namespace objval
