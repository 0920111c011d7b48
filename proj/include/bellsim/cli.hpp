// Copyright 2026 The bellsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bellsim/bounds.hpp"
#include "bellsim/core.hpp"

namespace bellsim::cli {

inline constexpr std::string_view kToolName = "bellsim";
inline constexpr std::string_view kVersion = "0.1.0";

/// Environment variable that replaces the built-in default seed.
inline constexpr const char* kSeedEnvVar = "BELLSIM_SEED";
inline constexpr std::uint64_t kDefaultSeed = 20260417;

/// Runs one command, e.g. {"scan", "--eta", "1"}. Returns the process exit
/// code: 0 when the run completed, nonzero on usage or runtime errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// "22.5deg" or "0.3927rad". The unit suffix is mandatory.
AnalyzerAngle parse_angle(std::string_view text);
/// Same syntax, without folding into [0, pi).
double parse_angle_value(std::string_view text);

/// Flat key=value text with '#' comments and blank lines.
std::vector<std::pair<std::string, std::string>> parse_config_text(std::string_view text);

/// Shortest round-trip decimal form, independent of the C locale.
std::string format_double(double value);

/// CSV rows (phi_rad,G,violated) with a '#' header block.
void write_scan_csv(std::ostream& out, const ScanResult& scan, const std::string& header);

/// Single polyline plot of G(phi) with the zero axis marked.
void write_scan_svg(std::ostream& out, const ScanResult& scan);

/// CSV rows (pair_index,a_rad,b_rad,r,q,count,n_emitted) with a '#' header block.
void write_counts_csv(std::ostream& out, const CountsTable& counts, const std::string& header);

}  // namespace bellsim::cli
