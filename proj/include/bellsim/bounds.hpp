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

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "bellsim/core.hpp"

namespace bellsim {

/// Single-photon probabilities entering g: wing 1 along a, a', b and wing 2
/// along b, b', a'.
struct SinglesProfile {
    ProbTriple p1_a;
    ProbTriple p1_ap;
    ProbTriple p1_b;
    ProbTriple p2_b;
    ProbTriple p2_bp;
    ProbTriple p2_ap;
};

/*!
 * The six scalars g is built from, in extreme-point table column order:
 * p_r(1)(a), p_q(2)(b), p_r(1)(a'), p_q(2)(b'), p_r(2)(a'), p_q(1)(b).
 */
struct GArguments {
    double p1_a = 0.0;
    double p2_b = 0.0;
    double p1_ap = 0.0;
    double p2_bp = 0.0;
    double p2_ap = 0.0;
    double p1_b = 0.0;
};

/// p1(a)[p2(b) - p2(b')] + p1(a')[p2(b) + p2(b')] - p1(a')p2(a') - p1(b)p2(b).
double g_value(const GArguments& x);

/// g_rq evaluated on the r/q components of a singles profile.
double g_function(const SinglesProfile& profile, Outcome r, Outcome q);

/// Single-photon probabilities entering f: wing 1 along a, a'; wing 2 along b, a, a'.
struct FProfile {
    ProbTriple p1_a;
    ProbTriple p1_ap;
    ProbTriple p2_b;
    ProbTriple p2_a;
    ProbTriple p2_ap;
};

struct FArguments {
    double p1_a = 0.0;   // p_r(1)(a)
    double p1_ap = 0.0;  // p_r(1)(a')
    double p2_b = 0.0;   // p_q(2)(b)
    double p2_a = 0.0;   // p_r(2)(a)
    double p2_ap = 0.0;  // p_r(2)(a')
};

/// -p1(a)p2(b) + p1(a')[p2(b) + p2(a) - p2(a')].
double f_value(const FArguments& x);
double f_function(const FProfile& profile, Outcome r, Outcome q);

/// Per-lambda detection masses, in table column order.
struct Inefficiencies {
    double alpha1 = 1.0;   // wing 1 along a
    double beta2 = 1.0;    // wing 2 along b
    double alpha1p = 1.0;  // wing 1 along a'
    double beta2p = 1.0;   // wing 2 along b'
    double alpha2p = 1.0;  // wing 2 along a'
    double beta1 = 1.0;    // wing 1 along b

    std::array<double, 6> as_array() const { return {alpha1, beta2, alpha1p, beta2p, alpha2p, beta1}; }
};

/// Which of the six slots sit at their cap (true) or at zero (false).
struct ExtremePattern {
    int row = 0;
    std::array<bool, 6> capped{};
    std::string_view g_expression;
};

/// The sixteen admissible vertices. Slots 3 and 5 (a' on both wings) are
/// capped together, as are slots 2 and 6 (b on both wings).
std::span<const ExtremePattern> extreme_patterns();

struct ExtremeRow {
    ExtremePattern pattern;
    GArguments assignment;
    double g_numeric = 0.0;
    double g_symbolic = 0.0;
};

/// Evaluates g on every admissible vertex next to its tabulated closed form.
/// Throws std::logic_error if the two disagree by more than 1e-12.
std::vector<ExtremeRow> enumerate_extremes(const Inefficiencies& ineff);

/// Closed-form g for a row (1-based) at the given inefficiencies.
double extreme_row_symbolic(int row, const Inefficiencies& ineff);

/// The six setting pairs the G statistic reads, in component order:
/// (a,b), (a,b'), (a',b), (a',b'), (a',a'), (b,b).
std::array<SettingPair, 6> g_setting_pairs(const SettingsQuad& quad);

/// Lambda-averages of the rows whose upper limit can exceed zero, rebuilt from
/// detected-coincidence masses. Each vanishes when the non-detection
/// probabilities do not depend on the analyzer direction.
struct AveragedRows {
    double row6 = 0.0;
    double row11 = 0.0;
    double row12 = 0.0;
    double row15 = 0.0;
    double row16 = 0.0;
};

AveragedRows averaged_rows_under_assumption_a(const JointDistribution& dist, const SettingsQuad& quad);

/// (1 - P0(2)(b)) (P0(1)(b) - P0(1)(a)): the row-11 average when joint
/// non-detection factorizes.
double row11_factorized(double p0_wing1_a, double p0_wing1_b, double p0_wing2_b);

inline constexpr double kBoundTolerance = 1e-12;

/// Value of a bounded statistic together with the probabilities it combines.
struct BoundReport {
    double value = 0.0;
    std::vector<double> components;
    double lower_bound = -1.0;
    double upper_bound = 0.0;
    double tolerance = kBoundTolerance;
    bool bound_violated = false;
};

using GReport = BoundReport;
using FReport = BoundReport;

/// P_rq(a,b) - P_rq(a,b') + P_rq(a',b) + P_rq(a',b') - P_rr(a',a') - P_qq(b,b),
/// checked against [-1, 0].
GReport g_statistic(const JointDistribution& dist, const SettingsQuad& quad, Outcome r, Outcome q,
                    double tolerance = kBoundTolerance);

/// s (eta F / 4)(3 cos phi - cos 3 phi - 2): the QM value of G_++ on quad_from_phi(phi).
double g_closed_form(const QmSource& src, double phi);

/// QM joint distributions for every pair in `pairs`.
JointDistribution qm_distribution(const QmSource& src, std::span<const SettingPair> pairs);

struct ScanPoint {
    double phi = 0.0;
    double g = 0.0;
    bool violated = false;
};

struct Interval {
    double lower = 0.0;
    double upper = 0.0;
};

struct ScanResult {
    std::vector<ScanPoint> points;
    std::vector<Interval> violation_intervals;
    std::optional<double> argmax;
    double g_max = 0.0;
};

inline constexpr double kScanRootTolerance = 1e-10;

/// Evaluates the closed-form G on `grid` evenly spaced points of (0, 2pi/3],
/// then refines every edge of {G > 0} by bisection and the maximizer by Brent's
/// method. Requires grid >= 64.
ScanResult scan_violation(const QmSource& src, std::size_t grid);

/// Settings for the three-direction statistic: wing-1 a, a' and wing-2 b.
struct FSettings {
    AnalyzerAngle a;
    AnalyzerAngle a_prime;
    AnalyzerAngle b;
};

/// Collinear settings with |a - b| = theta, |a' - b| = |a - a'| = theta/2,
/// built as a = theta, a' = theta/2, b = 0. Requires 0 <= theta <= pi.
FSettings f_settings_from_theta(double theta);

/// (a,b), (a',b), (a',a), (a',a') in component order.
std::array<SettingPair, 4> f_setting_pairs(const FSettings& settings);

/// -P_rq(a,b) + P_rq(a',b) + P_rr(a',a) - P_rr(a',a'), checked against [-1, 0].
FReport f_statistic(const JointDistribution& dist, const FSettings& settings, Outcome r, Outcome q,
                    double tolerance = kBoundTolerance);

}  // namespace bellsim
