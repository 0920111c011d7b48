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

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "bellsim/cli.hpp"

namespace bellsim::cli {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

}  // namespace

std::string format_double(double value) {
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc()) {
        throw std::runtime_error("failed to format number");
    }
    return std::string(buf.data(), ptr);
}

double parse_angle_value(std::string_view text) {
    text = trim(text);
    double scale = 0.0;
    if (text.ends_with("deg")) {
        scale = kPi / 180.0;
        text.remove_suffix(3);
    } else if (text.ends_with("rad")) {
        scale = 1.0;
        text.remove_suffix(3);
    } else {
        throw std::invalid_argument("angle needs a 'deg' or 'rad' suffix");
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
        throw std::invalid_argument("malformed angle value '" + std::string(text) + "'");
    }
    return value * scale;
}

AnalyzerAngle parse_angle(std::string_view text) { return AnalyzerAngle(parse_angle_value(text)); }

std::vector<std::pair<std::string, std::string>> parse_config_text(std::string_view text) {
    std::vector<std::pair<std::string, std::string>> entries;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key=value");
        }
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": empty key");
        }
        entries.emplace_back(std::string(key), std::string(value));
    }
    return entries;
}

void write_scan_csv(std::ostream& out, const ScanResult& scan, const std::string& header) {
    out << header;
    out << "phi_rad,G,violated\n";
    for (const auto& p : scan.points) {
        out << format_double(p.phi) << ',' << format_double(p.g) << ',' << (p.violated ? 1 : 0) << '\n';
    }
}

void write_scan_svg(std::ostream& out, const ScanResult& scan) {
    constexpr double kWidth = 640.0;
    constexpr double kHeight = 400.0;
    constexpr double kMargin = 50.0;
    const double x_max = 2.0 * kPi / 3.0;
    double y_lo = 0.0;
    double y_hi = 0.0;
    for (const auto& p : scan.points) {
        y_lo = std::min(y_lo, p.g);
        y_hi = std::max(y_hi, p.g);
    }
    if (y_hi - y_lo <= 0.0) {
        y_lo = -1e-3;
        y_hi = 1e-3;
    }
    const double pad = 0.05 * (y_hi - y_lo);
    y_lo -= pad;
    y_hi += pad;
    const auto sx = [&](double x) { return kMargin + (kWidth - 2 * kMargin) * x / x_max; };
    const auto sy = [&](double y) { return kHeight - kMargin - (kHeight - 2 * kMargin) * (y - y_lo) / (y_hi - y_lo); };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<line x1=\"" << kMargin << "\" y1=\"" << sy(0.0) << "\" x2=\"" << kWidth - kMargin << "\" y2=\"" << sy(0.0)
        << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
    out << "<text x=\"" << kWidth - kMargin + 4 << "\" y=\"" << sy(0.0) + 4
        << "\" font-size=\"11\" font-family=\"sans-serif\">G=0</text>\n";
    out << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < scan.points.size(); ++i) {
        out << (i ? " " : "") << format_double(sx(scan.points[i].phi)) << ',' << format_double(sy(scan.points[i].g));
    }
    out << "\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 12
        << "\" font-size=\"12\" font-family=\"sans-serif\" text-anchor=\"middle\">phi (rad), 0 to 2pi/3</text>\n";
    out << "<text x=\"14\" y=\"" << kHeight / 2 << "\" font-size=\"12\" font-family=\"sans-serif\" "
        << "transform=\"rotate(-90 14 " << kHeight / 2 << ")\" text-anchor=\"middle\">G(phi)</text>\n";
    out << "</svg>\n";
}

void write_counts_csv(std::ostream& out, const CountsTable& counts, const std::string& header) {
    out << header;
    out << "pair_index,a_rad,b_rad,r,q,count,n_emitted\n";
    for (std::size_t k = 0; k < counts.entries().size(); ++k) {
        const auto& e = counts.entries()[k];
        for (Outcome r : kAllOutcomes) {
            for (Outcome q : kAllOutcomes) {
                out << k << ',' << format_double(e.pair.first.radians()) << ','
                    << format_double(e.pair.second.radians()) << ',' << outcome_value(r) << ',' << outcome_value(q)
                    << ',' << e(r, q) << ',' << e.n_emitted << '\n';
            }
        }
    }
}

}  // namespace bellsim::cli
