// SPDX-License-Identifier: Apache-2.0
//
// The robust-scatter command line: estimate, sigma, experiment, selftest.
#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "robust_scatter/distributions.hpp"

namespace robust_scatter {

/// Exit codes of the command line.
enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitNumerical = 3, kExitIo = 4 };

inline constexpr std::string_view kSamplesHeader = "# robust-scatter v1";

/// Samples text: the header line, then one row per sample with 2m comma
/// separated reals (Re z_1..Re z_m, Im z_1..Im z_m). Later lines starting with
/// '#' and blank lines are skipped.
SampleSet parse_samples_text(std::string_view text);
SampleSet read_samples_file(const std::string& path);
std::string format_samples(const SampleSet& samples, std::string_view comment = {});

/// Runs one invocation; args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace robust_scatter
