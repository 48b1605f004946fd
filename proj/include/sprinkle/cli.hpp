#pragma once

#include <iosfwd>

namespace sprinkle {

/// Entry point of the `sprinkle` command line tool. Returns the process exit
/// code: 0 on success, 1 on runtime failures, 2 on configuration errors.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace sprinkle
