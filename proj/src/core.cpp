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

#include "bellsim/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bellsim {

namespace {

std::string describe(const SettingPair& pair) {
    std::ostringstream out;
    out << "(" << pair.first.radians() << " rad, " << pair.second.radians() << " rad)";
    return out.str();
}

// Post-selected correlation from any 3x3 container of nonnegative weights.
template <typename Cell>
double post_selected_correlation(const std::array<std::array<Cell, 3>, 3>& cells) {
    const auto pp = static_cast<double>(cells[0][0]);
    const auto pm = static_cast<double>(cells[0][1]);
    const auto mp = static_cast<double>(cells[1][0]);
    const auto mm = static_cast<double>(cells[1][1]);
    const double detected = pp + pm + mp + mm;
    if (!(detected > 0.0)) {
        throw NoCoincidencesError("no coincidences: post-selected correlation is undefined");
    }
    return (pp + mm - pm - mp) / detected;
}

}  // namespace

AnalyzerAngle::AnalyzerAngle(double radians) {
    if (!std::isfinite(radians)) {
        throw std::invalid_argument("analyzer angle must be finite");
    }
    double v = std::fmod(radians, kPi);
    if (v < 0.0) {
        v += kPi;
    }
    // fmod of a tiny negative plus pi can round up to pi itself.
    if (v >= kPi) {
        v = 0.0;
    }
    value_ = v;
}

AnalyzerAngle AnalyzerAngle::from_degrees(double degrees) { return AnalyzerAngle(degrees * kPi / 180.0); }

double difference_mod_pi(AnalyzerAngle a, AnalyzerAngle b) { return AnalyzerAngle(a.radians() - b.radians()).radians(); }

double separation(AnalyzerAngle a, AnalyzerAngle b) {
    const double d = difference_mod_pi(a, b);
    return std::min(d, kPi - d);
}

double cos2_difference(AnalyzerAngle a, AnalyzerAngle b) { return std::cos(2.0 * (a.radians() - b.radians())); }

Outcome outcome_from_int(int value) {
    switch (value) {
        case 1:
            return Outcome::plus;
        case -1:
            return Outcome::minus;
        case 0:
            return Outcome::none;
        default:
            throw std::invalid_argument("outcome must be +1, -1 or 0, got " + std::to_string(value));
    }
}

std::string to_string(Outcome o) {
    switch (o) {
        case Outcome::plus:
            return "+1";
        case Outcome::minus:
            return "-1";
        case Outcome::none:
            return "0";
    }
    return "?";
}

ProbTriple::ProbTriple(double plus, double minus, double none) : plus_(plus), minus_(minus), none_(none) {
    for (double p : {plus, minus, none}) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw std::invalid_argument("probability component outside [0, 1]");
        }
    }
    if (std::abs(plus + minus + none - 1.0) > kNormalizationTolerance) {
        throw std::invalid_argument("probability triple does not sum to 1");
    }
}

ProbTriple ProbTriple::from_detected(double plus, double minus) {
    // Clamp the rounding residue so that e.g. (0.7, 0.3) yields p0 = 0 exactly.
    const double none = std::max(0.0, 1.0 - (plus + minus));
    return ProbTriple(plus, minus, none);
}

double ProbTriple::operator[](Outcome o) const {
    switch (o) {
        case Outcome::plus:
            return plus_;
        case Outcome::minus:
            return minus_;
        case Outcome::none:
            return none_;
    }
    return 0.0;
}

SettingsQuad quad_from_phi(double phi) {
    if (!(phi >= 0.0 && phi <= 2.0 * kPi / 3.0)) {
        throw std::invalid_argument("phi must lie in [0, 2pi/3]");
    }
    return SettingsQuad{
        .a = AnalyzerAngle(phi / 2.0),
        .b = AnalyzerAngle(0.0),
        .a_prime = AnalyzerAngle(-phi / 2.0),
        .b_prime = AnalyzerAngle(-phi),
    };
}

double JointTable::total() const {
    double sum = 0.0;
    for (const auto& row : cells) {
        for (double p : row) {
            sum += p;
        }
    }
    return sum;
}

double JointTable::detected_mass() const { return cells[0][0] + cells[0][1] + cells[1][0] + cells[1][1]; }

double JointTable::wing1_marginal(Outcome r) const {
    const auto& row = cells[outcome_index(r)];
    return row[0] + row[1] + row[2];
}

double JointTable::wing2_marginal(Outcome q) const {
    const std::size_t j = outcome_index(q);
    return cells[0][j] + cells[1][j] + cells[2][j];
}

void JointDistribution::set(const SettingPair& pair, const JointTable& table) {
    for (const auto& row : table.cells) {
        for (double p : row) {
            if (!(p >= 0.0 && p <= 1.0)) {
                throw std::invalid_argument("joint probability outside [0, 1] for " + describe(pair));
            }
        }
    }
    if (std::abs(table.total() - 1.0) > kNormalizationTolerance) {
        throw std::invalid_argument("joint table does not sum to 1 for " + describe(pair));
    }
    for (auto& entry : entries_) {
        if (entry.pair == pair) {
            entry.table = table;
            return;
        }
    }
    entries_.push_back({pair, table});
}

const JointTable* JointDistribution::find(const SettingPair& pair) const {
    for (const auto& entry : entries_) {
        if (entry.pair == pair) {
            return &entry.table;
        }
    }
    return nullptr;
}

const JointTable& JointDistribution::at(const SettingPair& pair) const {
    if (const auto* table = find(pair)) {
        return *table;
    }
    throw std::out_of_range("missing setting pair " + describe(pair));
}

std::uint64_t CountsTable::Entry::cell_sum() const {
    std::uint64_t sum = 0;
    for (const auto& row : counts) {
        for (auto n : row) {
            sum += n;
        }
    }
    return sum;
}

void CountsTable::add(const SettingPair& pair, const CountCells& counts, std::uint64_t n_emitted) {
    Entry entry{pair, counts, n_emitted};
    if (entry.cell_sum() != n_emitted) {
        throw std::invalid_argument("counts do not sum to n_emitted for " + describe(pair));
    }
    if (find(pair) != nullptr) {
        throw std::invalid_argument("duplicate setting pair " + describe(pair));
    }
    entries_.push_back(entry);
}

const CountsTable::Entry* CountsTable::find(const SettingPair& pair) const {
    for (const auto& entry : entries_) {
        if (entry.pair == pair) {
            return &entry;
        }
    }
    return nullptr;
}

const CountsTable::Entry& CountsTable::at(const SettingPair& pair) const {
    if (const auto* entry = find(pair)) {
        return *entry;
    }
    throw std::out_of_range("missing setting pair " + describe(pair));
}

bool operator==(const CountsTable::Entry& x, const CountsTable::Entry& y) {
    return x.pair == y.pair && x.counts == y.counts && x.n_emitted == y.n_emitted;
}

bool operator==(const CountsTable& x, const CountsTable& y) { return x.entries_ == y.entries_; }

void QmSource::validate() const {
    if (correlation_sign != 1 && correlation_sign != -1) {
        throw std::invalid_argument("correlation sign must be +1 or -1");
    }
    if (!(visibility >= 0.0 && visibility <= 1.0)) {
        throw std::invalid_argument("correlation visibility F must lie in [0, 1]");
    }
    if (!(efficiency > 0.0 && efficiency <= 1.0)) {
        throw std::invalid_argument("overall efficiency must lie in (0, 1]");
    }
}

double qm_joint_probability(const QmSource& src, Outcome r, Outcome q, AnalyzerAngle a, AnalyzerAngle b) {
    if (r == Outcome::none || q == Outcome::none) {
        throw std::invalid_argument("qm_joint_probability is defined for detected outcomes only");
    }
    src.validate();
    const double rq = static_cast<double>(outcome_value(r) * outcome_value(q));
    return 0.25 * src.efficiency *
           (1.0 + src.correlation_sign * rq * src.visibility * cos2_difference(a, b));
}

JointTable qm_full_distribution(const QmSource& src, AnalyzerAngle a, AnalyzerAngle b) {
    src.validate();
    const double wing = std::sqrt(src.efficiency);
    const double lost = 1.0 - wing;
    JointTable t;
    for (Outcome r : kDetectedOutcomes) {
        for (Outcome q : kDetectedOutcomes) {
            t(r, q) = qm_joint_probability(src, r, q, a, b);
        }
        // The mate is lost; conditional on one detection the outcome is unbiased.
        t(r, Outcome::none) = 0.5 * wing * lost;
        t(Outcome::none, r) = 0.5 * wing * lost;
    }
    t(Outcome::none, Outcome::none) = lost * lost;
    return t;
}

double correlation_from_counts(const CountsTable::Entry& entry) { return post_selected_correlation(entry.counts); }

double correlation_from_counts(const CountsTable& counts, const SettingPair& pair) {
    return correlation_from_counts(counts.at(pair));
}

double effective_correlation(const JointTable& table) { return post_selected_correlation(table.cells); }

double chsh_statistic(double c_ab, double c_apb, double c_apbp, double c_abp) {
    for (double c : {c_ab, c_apb, c_apbp, c_abp}) {
        if (!(c >= -1.0 - kNormalizationTolerance && c <= 1.0 + kNormalizationTolerance)) {
            throw std::invalid_argument("correlation outside [-1, 1]");
        }
    }
    return std::abs(c_ab + c_apb + c_apbp - c_abp);
}

}  // namespace bellsim
