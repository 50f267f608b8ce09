#pragma once

#include <ostream>

namespace rgd {

/// Entry point behind the `rgd` executable. Exit codes: 0 success, 1 runtime
/// failure (partial results are flagged in manifest.echo), 2 bad usage or an
/// invalid config.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rgd
