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

#include "bellsim/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

namespace bellsim {

namespace {

constexpr ExtremePattern pattern_of(int row, const char (&bits)[7], std::string_view expr) {
    ExtremePattern p{row, {}, expr};
    for (std::size_t i = 0; i < 6; ++i) {
        p.capped[i] = bits[i] == '1';
    }
    return p;
}

// Column order: alpha1, beta2, alpha1', beta2', alpha2', beta1.
constexpr std::array<ExtremePattern, 16> kPatterns = {
    pattern_of(1, "000000", "0"),
    pattern_of(2, "100000", "0"),
    pattern_of(3, "010001", "-beta2*beta1"),
    pattern_of(4, "001010", "-alpha1'*alpha2'"),
    pattern_of(5, "000100", "0"),
    pattern_of(6, "001110", "alpha1'*(beta2'-alpha2')"),
    pattern_of(7, "010101", "-beta2*beta1"),
    pattern_of(8, "100100", "-alpha1*beta2'"),
    pattern_of(9, "011011", "alpha1'*(beta2-alpha2')-beta2*beta1"),
    pattern_of(10, "101010", "-alpha1'*alpha2'"),
    pattern_of(11, "110001", "(alpha1-beta1)*beta2"),
    pattern_of(12, "011111", "alpha1'*(beta2'-alpha2')+(alpha1'-beta1)*beta2"),
    pattern_of(13, "101110", "(-alpha1+alpha1')*beta2'-alpha1'*alpha2'"),
    pattern_of(14, "110101", "alpha1*(beta2-beta2')-beta2*beta1"),
    pattern_of(15, "111011", "(alpha1-beta1)*beta2+alpha1'*(beta2-alpha2')"),
    pattern_of(16, "111111", "(alpha1-beta1)*beta2+(alpha1'-alpha1)*beta2'+alpha1'*(beta2-alpha2')"),
};

constexpr bool patterns_respect_coupling() {
    for (const auto& p : kPatterns) {
        if (p.capped[2] != p.capped[4] || p.capped[1] != p.capped[5]) {
            return false;
        }
    }
    return true;
}
static_assert(patterns_respect_coupling(), "a' and b slots must be capped on both wings together");

void check_pm(Outcome o) {
    if (o == Outcome::none) {
        throw std::invalid_argument("r and q must be +1 or -1");
    }
}

double detected(const JointDistribution& dist, AnalyzerAngle x, AnalyzerAngle y) {
    return dist.at({x, y}).detected_mass();
}

BoundReport make_report(double value, std::vector<double> components, double tolerance) {
    BoundReport report;
    report.value = value;
    report.components = std::move(components);
    report.tolerance = tolerance;
    report.bound_violated = value > report.upper_bound + tolerance || value < report.lower_bound - tolerance;
    return report;
}

}  // namespace

double g_value(const GArguments& x) {
    return x.p1_a * (x.p2_b - x.p2_bp) + x.p1_ap * (x.p2_b + x.p2_bp) - x.p1_ap * x.p2_ap - x.p1_b * x.p2_b;
}

double g_function(const SinglesProfile& s, Outcome r, Outcome q) {
    check_pm(r);
    check_pm(q);
    return g_value({
        .p1_a = s.p1_a[r],
        .p2_b = s.p2_b[q],
        .p1_ap = s.p1_ap[r],
        .p2_bp = s.p2_bp[q],
        .p2_ap = s.p2_ap[r],
        .p1_b = s.p1_b[q],
    });
}

double f_value(const FArguments& x) { return -x.p1_a * x.p2_b + x.p1_ap * (x.p2_b + x.p2_a - x.p2_ap); }

double f_function(const FProfile& s, Outcome r, Outcome q) {
    check_pm(r);
    check_pm(q);
    return f_value({
        .p1_a = s.p1_a[r],
        .p1_ap = s.p1_ap[r],
        .p2_b = s.p2_b[q],
        .p2_a = s.p2_a[r],
        .p2_ap = s.p2_ap[r],
    });
}

std::span<const ExtremePattern> extreme_patterns() { return kPatterns; }

double extreme_row_symbolic(int row, const Inefficiencies& e) {
    const double a1 = e.alpha1;
    const double b2 = e.beta2;
    const double a1p = e.alpha1p;
    const double b2p = e.beta2p;
    const double a2p = e.alpha2p;
    const double b1 = e.beta1;
    switch (row) {
        case 1:
        case 2:
        case 5:
            return 0.0;
        case 3:
        case 7:
            return -b2 * b1;
        case 4:
        case 10:
            return -a1p * a2p;
        case 6:
            return a1p * (b2p - a2p);
        case 8:
            return -a1 * b2p;
        case 9:
            return a1p * (b2 - a2p) - b2 * b1;
        case 11:
            return (a1 - b1) * b2;
        case 12:
            return a1p * (b2p - a2p) + (a1p - b1) * b2;
        case 13:
            return (-a1 + a1p) * b2p - a1p * a2p;
        case 14:
            return a1 * (b2 - b2p) - b2 * b1;
        case 15:
            return (a1 - b1) * b2 + a1p * (b2 - a2p);
        case 16:
            return (a1 - b1) * b2 + (a1p - a1) * b2p + a1p * (b2 - a2p);
        default:
            throw std::out_of_range("extreme rows are numbered 1..16");
    }
}

std::vector<ExtremeRow> enumerate_extremes(const Inefficiencies& ineff) {
    const auto caps = ineff.as_array();
    for (double c : caps) {
        if (!(c >= 0.0 && c <= 1.0)) {
            throw std::invalid_argument("inefficiency measures must lie in [0, 1]");
        }
    }
    std::vector<ExtremeRow> rows;
    rows.reserve(kPatterns.size());
    for (const auto& pattern : kPatterns) {
        std::array<double, 6> v{};
        for (std::size_t i = 0; i < 6; ++i) {
            v[i] = pattern.capped[i] ? caps[i] : 0.0;
        }
        ExtremeRow row;
        row.pattern = pattern;
        row.assignment = {.p1_a = v[0], .p2_b = v[1], .p1_ap = v[2], .p2_bp = v[3], .p2_ap = v[4], .p1_b = v[5]};
        row.g_numeric = g_value(row.assignment);
        row.g_symbolic = extreme_row_symbolic(pattern.row, ineff);
        if (std::abs(row.g_numeric - row.g_symbolic) > 1e-12) {
            throw std::logic_error("extreme row " + std::to_string(pattern.row) + " disagrees with its closed form");
        }
        rows.push_back(row);
    }
    return rows;
}

std::array<SettingPair, 6> g_setting_pairs(const SettingsQuad& q) {
    return {SettingPair{q.a, q.b},       SettingPair{q.a, q.b_prime},       SettingPair{q.a_prime, q.b},
            SettingPair{q.a_prime, q.b_prime}, SettingPair{q.a_prime, q.a_prime}, SettingPair{q.b, q.b}};
}

AveragedRows averaged_rows_under_assumption_a(const JointDistribution& dist, const SettingsQuad& q) {
    const double d_ab = detected(dist, q.a, q.b);
    const double d_abp = detected(dist, q.a, q.b_prime);
    const double d_apb = detected(dist, q.a_prime, q.b);
    const double d_apbp = detected(dist, q.a_prime, q.b_prime);
    const double d_apap = detected(dist, q.a_prime, q.a_prime);
    const double d_bb = detected(dist, q.b, q.b);

    AveragedRows rows;
    rows.row11 = d_ab - d_bb;
    rows.row6 = d_apbp - d_apap;
    rows.row12 = rows.row6 + (d_apb - d_bb);
    rows.row15 = rows.row11 + (d_apb - d_apap);
    rows.row16 = rows.row11 + (d_apbp - d_abp) + (d_apb - d_apap);
    return rows;
}

double row11_factorized(double p0_wing1_a, double p0_wing1_b, double p0_wing2_b) {
    return (1.0 - p0_wing2_b) * (p0_wing1_b - p0_wing1_a);
}

GReport g_statistic(const JointDistribution& dist, const SettingsQuad& quad, Outcome r, Outcome q, double tolerance) {
    check_pm(r);
    check_pm(q);
    const auto pairs = g_setting_pairs(quad);
    std::vector<double> c = {
        dist.at(pairs[0])(r, q), dist.at(pairs[1])(r, q), dist.at(pairs[2])(r, q),
        dist.at(pairs[3])(r, q), dist.at(pairs[4])(r, r), dist.at(pairs[5])(q, q),
    };
    const double value = c[0] - c[1] + c[2] + c[3] - c[4] - c[5];
    return make_report(value, std::move(c), tolerance);
}

double g_closed_form(const QmSource& src, double phi) {
    src.validate();
    return src.correlation_sign * 0.25 * src.efficiency * src.visibility *
           (3.0 * std::cos(phi) - std::cos(3.0 * phi) - 2.0);
}

JointDistribution qm_distribution(const QmSource& src, std::span<const SettingPair> pairs) {
    JointDistribution dist;
    for (const auto& pair : pairs) {
        dist.set(pair, qm_full_distribution(src, pair.first, pair.second));
    }
    return dist;
}

ScanResult scan_violation(const QmSource& src, std::size_t grid) {
    if (grid < 64) {
        throw std::invalid_argument("scan grid needs at least 64 points");
    }
    src.validate();
    const double phi_max = 2.0 * kPi / 3.0;
    const double step = phi_max / static_cast<double>(grid);
    const auto G = [&](double phi) { return g_closed_form(src, phi); };

    ScanResult result;
    result.points.reserve(grid);
    for (std::size_t i = 0; i < grid; ++i) {
        const double phi = static_cast<double>(i + 1) * step;
        const double g = G(phi);
        result.points.push_back({phi, g, g > 0.0});
    }

    const auto converged = [](double lo, double hi) { return std::abs(hi - lo) <= kScanRootTolerance; };
    const auto edge = [&](double lo, double hi) {
        const auto [x0, x1] = boost::math::tools::bisect(G, lo, hi, converged);
        return 0.5 * (x0 + x1);
    };

    std::size_t best = grid;
    for (std::size_t i = 0; i < grid;) {
        if (!result.points[i].violated) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < grid && result.points[j + 1].violated) {
            ++j;
        }
        const double left_outside = i == 0 ? 0.0 : result.points[i - 1].phi;
        Interval interval;
        interval.lower = edge(left_outside, result.points[i].phi);
        interval.upper = j + 1 == grid ? phi_max : edge(result.points[j].phi, result.points[j + 1].phi);
        result.violation_intervals.push_back(interval);
        for (std::size_t k = i; k <= j; ++k) {
            if (best == grid || result.points[k].g > result.points[best].g) {
                best = k;
            }
        }
        i = j + 1;
    }

    if (best == grid) {
        result.g_max = result.points.front().g;
        for (const auto& p : result.points) {
            result.g_max = std::max(result.g_max, p.g);
        }
        return result;
    }
    const double lo = best == 0 ? 0.5 * step : result.points[best - 1].phi;
    const double hi = best + 1 == grid ? phi_max : result.points[best + 1].phi;
    const auto [phi_star, neg_g] = boost::math::tools::brent_find_minima([&](double phi) { return -G(phi); }, lo, hi,
                                                                         std::numeric_limits<double>::digits / 2 + 1);
    result.argmax = phi_star;
    result.g_max = -neg_g;
    return result;
}

FSettings f_settings_from_theta(double theta) {
    if (!(theta >= 0.0 && theta <= kPi)) {
        throw std::invalid_argument("theta must lie in [0, pi]");
    }
    return FSettings{.a = AnalyzerAngle(theta), .a_prime = AnalyzerAngle(theta / 2.0), .b = AnalyzerAngle(0.0)};
}

std::array<SettingPair, 4> f_setting_pairs(const FSettings& s) {
    return {SettingPair{s.a, s.b}, SettingPair{s.a_prime, s.b}, SettingPair{s.a_prime, s.a},
            SettingPair{s.a_prime, s.a_prime}};
}

FReport f_statistic(const JointDistribution& dist, const FSettings& settings, Outcome r, Outcome q,
                    double tolerance) {
    check_pm(r);
    check_pm(q);
    const auto pairs = f_setting_pairs(settings);
    std::vector<double> c = {
        dist.at(pairs[0])(r, q),
        dist.at(pairs[1])(r, q),
        dist.at(pairs[2])(r, r),
        dist.at(pairs[3])(r, r),
    };
    const double value = -c[0] + c[1] + c[2] - c[3];
    return make_report(value, std::move(c), tolerance);
}

}  // namespace bellsim
