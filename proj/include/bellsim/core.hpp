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
#include <compare>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace bellsim {

inline constexpr double kPi = std::numbers::pi;

// Absolute slack allowed when checking that probabilities sum to one.
inline constexpr double kNormalizationTolerance = 1e-12;

/// Raised when a count-based estimator has no detected coincidences to work with.
class NoCoincidencesError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

/// A linear polarization direction. Stored in radians, canonical in [0, pi).
class AnalyzerAngle {
  public:
    constexpr AnalyzerAngle() = default;
    explicit AnalyzerAngle(double radians);

    static AnalyzerAngle from_degrees(double degrees);

    double radians() const { return value_; }
    double degrees() const { return value_ * 180.0 / kPi; }

    friend auto operator<=>(const AnalyzerAngle&, const AnalyzerAngle&) = default;

  private:
    double value_ = 0.0;
};

/// (a - b) reduced into [0, pi).
double difference_mod_pi(AnalyzerAngle a, AnalyzerAngle b);

/// Folded separation between two directions, in [0, pi/2].
double separation(AnalyzerAngle a, AnalyzerAngle b);

/// cos 2(a - b); the only way polarization correlations depend on the settings.
double cos2_difference(AnalyzerAngle a, AnalyzerAngle b);

/// Trinary measurement result. `none` is reserved for a non-detection.
enum class Outcome : std::int8_t { minus = -1, none = 0, plus = 1 };

inline constexpr std::array<Outcome, 3> kAllOutcomes = {Outcome::plus, Outcome::minus, Outcome::none};
inline constexpr std::array<Outcome, 2> kDetectedOutcomes = {Outcome::plus, Outcome::minus};

/// Row/column index of an outcome in 3x3 tables: plus=0, minus=1, none=2.
constexpr std::size_t outcome_index(Outcome o) {
    switch (o) {
        case Outcome::plus:
            return 0;
        case Outcome::minus:
            return 1;
        case Outcome::none:
            return 2;
    }
    return 2;
}

constexpr int outcome_value(Outcome o) { return static_cast<int>(o); }

/// Parses +1, -1 or 0 into an Outcome.
Outcome outcome_from_int(int value);

std::string to_string(Outcome o);

/// Single-photon outcome probabilities (p+, p-, p0) for one analyzer direction.
class ProbTriple {
  public:
    constexpr ProbTriple() = default;
    ProbTriple(double plus, double minus, double none);

    /// The non-detection probability is the complement of the detected mass.
    static ProbTriple from_detected(double plus, double minus);

    double plus() const { return plus_; }
    double minus() const { return minus_; }
    double none() const { return none_; }
    double operator[](Outcome o) const;

    /// alpha = p+ + p- = 1 - p0.
    double detection_mass() const { return plus_ + minus_; }

  private:
    double plus_ = 0.0;
    double minus_ = 0.0;
    double none_ = 1.0;
};

/// The four analyzer directions of a CHSH-style run: a, b, a', b'.
struct SettingsQuad {
    AnalyzerAngle a;
    AnalyzerAngle b;
    AnalyzerAngle a_prime;
    AnalyzerAngle b_prime;
};

/// Quad with |a-b| = |a'-b| = |a'-b'| = phi/2 and |a-b'| = 3phi/2, built as
/// (phi/2, 0, -phi/2, -phi). Requires 0 <= phi <= 2pi/3.
SettingsQuad quad_from_phi(double phi);

/// Ordered (wing 1, wing 2) analyzer directions.
struct SettingPair {
    AnalyzerAngle first;
    AnalyzerAngle second;

    friend auto operator<=>(const SettingPair&, const SettingPair&) = default;
};

/// 3x3 joint outcome probabilities for one setting pair, indexed by outcome_index.
struct JointTable {
    std::array<std::array<double, 3>, 3> cells{};

    double operator()(Outcome r, Outcome q) const { return cells[outcome_index(r)][outcome_index(q)]; }
    double& operator()(Outcome r, Outcome q) { return cells[outcome_index(r)][outcome_index(q)]; }

    double total() const;
    /// Mass of the four cells where both photons were detected.
    double detected_mass() const;
    double wing1_marginal(Outcome r) const;
    double wing2_marginal(Outcome q) const;
};

/// Joint tables keyed by setting pair.
class JointDistribution {
  public:
    struct Entry {
        SettingPair pair;
        JointTable table;
    };

    /// Inserts or replaces. Throws if the table is not a normalized distribution.
    void set(const SettingPair& pair, const JointTable& table);
    const JointTable* find(const SettingPair& pair) const;
    /// Throws std::out_of_range("missing setting pair ...") when absent.
    const JointTable& at(const SettingPair& pair) const;

    const std::vector<Entry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

  private:
    std::vector<Entry> entries_;
};

using CountCells = std::array<std::array<std::uint64_t, 3>, 3>;

/// Recorded event counts per setting pair, plus the number of pairs emitted.
class CountsTable {
  public:
    struct Entry {
        SettingPair pair;
        CountCells counts{};
        std::uint64_t n_emitted = 0;

        std::uint64_t operator()(Outcome r, Outcome q) const { return counts[outcome_index(r)][outcome_index(q)]; }
        std::uint64_t cell_sum() const;
    };

    /// Appends a setting pair. Throws if the cells do not sum to n_emitted or
    /// the pair is already present.
    void add(const SettingPair& pair, const CountCells& counts, std::uint64_t n_emitted);
    const Entry* find(const SettingPair& pair) const;
    const Entry& at(const SettingPair& pair) const;

    const std::vector<Entry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

    friend bool operator==(const CountsTable&, const CountsTable&);

  private:
    std::vector<Entry> entries_;
};

bool operator==(const CountsTable::Entry& x, const CountsTable::Entry& y);

/// Parameters of the parallel-polarization entangled photon source.
struct QmSource {
    int correlation_sign = +1;  // +1: |HH>+|VV>; -1: anticorrelated family
    double visibility = 1.0;    // F in [0, 1]
    double efficiency = 1.0;    // eta_overall in (0, 1]

    /// Throws std::invalid_argument if any field is out of range.
    void validate() const;
};

/// (eta/4)[1 + s r q F cos 2(a-b)] for detected outcomes r, q.
double qm_joint_probability(const QmSource& src, Outcome r, Outcome q, AnalyzerAngle a, AnalyzerAngle b);

/// Full 3x3 table: the detected block above, completed with independent
/// per-wing loss of efficiency sqrt(eta).
JointTable qm_full_distribution(const QmSource& src, AnalyzerAngle a, AnalyzerAngle b);

/// Post-selected correlation (N++ + N-- - N+- - N-+) / (detected coincidences).
double correlation_from_counts(const CountsTable& counts, const SettingPair& pair);
double correlation_from_counts(const CountsTable::Entry& entry);

/// Same estimator applied to probabilities instead of counts.
double effective_correlation(const JointTable& table);

/// |c(a,b) + c(a',b) + c(a',b') - c(a,b')|.
double chsh_statistic(double c_ab, double c_apb, double c_apbp, double c_abp);

}  // namespace bellsim
