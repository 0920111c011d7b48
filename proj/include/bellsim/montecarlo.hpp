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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "bellsim/bounds.hpp"
#include "bellsim/core.hpp"
#include "bellsim/lhv.hpp"

namespace bellsim {

using Source = std::variant<QmSource, LhvModelPtr>;

std::string describe(const Source& source);

/// Everything that determines a simulated run. Two equal configs produce
/// identical counts regardless of the number of worker threads.
struct ExperimentConfig {
    Source source = QmSource{};
    std::vector<SettingPair> settings;
    std::uint64_t pairs_per_setting = 0;
    /// Per-photon detector efficiency, applied after the source's own outcome.
    DirectionalEfficiency detector1{};
    DirectionalEfficiency detector2{};
    std::uint64_t seed = 0;

    /// Throws std::invalid_argument on an unusable config.
    void validate() const;
};

/// Event-level simulation of every setting pair. `workers` = 0 uses the
/// hardware concurrency.
CountsTable run_experiment(const ExperimentConfig& cfg, std::size_t workers = 0);

/// One simulated pair, exposed for diagnostics of the sampling path.
struct PairEvent {
    HiddenVar lambda;  // empty for QM sources
    Outcome wing1 = Outcome::none;
    Outcome wing2 = Outcome::none;
};

/// Replays pairs [first, first + count) of setting `setting_index` exactly as
/// run_experiment samples them.
std::vector<PairEvent> trace_pairs(const ExperimentConfig& cfg, std::size_t setting_index, std::uint64_t first,
                                   std::uint64_t count);

/// Cell counts divided by the pair's emission count.
JointDistribution probabilities_from_counts(const CountsTable& counts);

struct RatioReport {
    std::int64_t numerator = 0;
    std::int64_t denominator = 0;
    double ratio = 0.0;
    double std_error = 0.0;
    bool violated = false;  // ratio > 1 + 3 * std_error
};

inline constexpr double kRatioSigmas = 3.0;

/// [N_rq(a,b) - N_rq(a,b') + N_rq(a',b) + N_rq(a',b')] / [N_rr(a',a') + N_qq(b,b)]
/// from raw recorded counts. The six pairs must share one emission count.
RatioReport ratio_statistic(const CountsTable& counts, const SettingsQuad& quad, Outcome r, Outcome q);

struct ChiSquareResult {
    double statistic = 0.0;
    std::size_t dof = 0;
    double p_value = 1.0;
};

/// Pearson chi-square test that every group shares one success proportion.
ChiSquareResult chi_square_homogeneity(std::span<const std::uint64_t> successes,
                                       std::span<const std::uint64_t> trials);

inline constexpr double kAssumptionASignificance = 0.01;

struct DirectionCount {
    AnalyzerAngle direction;
    std::uint64_t detected = 0;
    std::uint64_t emitted = 0;
};

struct WingHomogeneity {
    std::vector<DirectionCount> directions;
    ChiSquareResult test;
    bool pass = false;
};

struct AssumptionAReport {
    WingHomogeneity wing1;
    WingHomogeneity wing2;
    double significance = kAssumptionASignificance;
    double statistic = 0.0;  // larger of the two wings
    double p_value = 1.0;    // smaller of the two wings
    bool pass = false;       // both wings pass
};

/// Pools detected-vs-emitted photons by analyzer direction on each wing and
/// tests their homogeneity. Needs at least two directions per wing.
AssumptionAReport assumption_a_test(const CountsTable& counts, double significance = kAssumptionASignificance);

struct ChshReport {
    std::array<double, 4> correlations{};  // c(a,b), c(a',b), c(a',b'), c(a,b')
    std::array<double, 4> std_errors{};
    double value = 0.0;
    double std_error = 0.0;
};

/// CHSH combination of post-selected correlations with binomial errors.
ChshReport chsh_from_counts(const CountsTable& counts, const SettingsQuad& quad);

}  // namespace bellsim
