#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace aog {

// Command-line surface of the detector. `args` holds the arguments without
// the program name. Normal output goes to `out`, diagnostics to `err`.
// Returns the process exit status: 0 on success, 1 on a usage error (with
// the usage text on `err`), 2 on a data error (unreadable, malformed, or
// inconsistent inputs).
//
// Subcommands:
//   synth    generation spec (JSON) -> sample files + manifest
//   train    manifest + config -> model container + JSON report
//   detect   model + manifest or single sample -> detection lines
//   eval     detection lines + manifest -> AP, curve CSVs, SVG plots
//   inspect  model container -> structure and weight-norm summary
//
// Given identical inputs and seed, every subcommand writes byte-identical
// outputs; nothing emits timestamps.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace aog
